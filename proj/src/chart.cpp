#include "vizkb/chart.hpp"

#include <algorithm>
#include <utility>

#include "vizkb/error.hpp"

namespace vizkb {

namespace {

template <typename E, std::size_t N>
using NameTable = std::array<std::pair<E, std::string_view>, N>;

constexpr NameTable<DataType, 4> kDataTypeNames{{{DataType::number, "number"},
                                                 {DataType::string, "string"},
                                                 {DataType::datetime, "datetime"},
                                                 {DataType::boolean, "boolean"}}};
constexpr NameTable<Channel, 6> kChannelNames{{{Channel::x, "x"},
                                               {Channel::y, "y"},
                                               {Channel::color, "color"},
                                               {Channel::size, "size"},
                                               {Channel::shape, "shape"},
                                               {Channel::text, "text"}}};
constexpr NameTable<Aggregate, 4> kAggregateNames{{{Aggregate::none, "none"},
                                                   {Aggregate::count, "count"},
                                                   {Aggregate::mean, "mean"},
                                                   {Aggregate::sum, "sum"}}};
constexpr NameTable<Stack, 3> kStackNames{
    {{Stack::none, "none"}, {Stack::zero, "zero"}, {Stack::normalize, "normalize"}}};
constexpr NameTable<ScaleType, 4> kScaleNames{{{ScaleType::linear, "linear"},
                                               {ScaleType::log, "log"},
                                               {ScaleType::ordinal, "ordinal"},
                                               {ScaleType::categorical, "categorical"}}};
constexpr NameTable<MarkType, 6> kMarkNames{{{MarkType::point, "point"},
                                             {MarkType::bar, "bar"},
                                             {MarkType::line, "line"},
                                             {MarkType::area, "area"},
                                             {MarkType::tick, "tick"},
                                             {MarkType::rect, "rect"}}};
constexpr NameTable<Coordinates, 2> kCoordinateNames{
    {{Coordinates::cartesian, "cartesian"}, {Coordinates::polar, "polar"}}};
constexpr NameTable<FacetDirection, 2> kFacetNames{
    {{FacetDirection::row, "row"}, {FacetDirection::col, "col"}}};

template <typename E, std::size_t N>
std::string_view name_of(const NameTable<E, N>& table, E v) {
    for (const auto& [e, name] : table) {
        if (e == v) return name;
    }
    return "?";
}

template <typename E, std::size_t N>
E parse_name(const NameTable<E, N>& table, std::string_view s, std::string_view what) {
    for (const auto& [e, name] : table) {
        if (name == s) return e;
    }
    throw ParseError("unknown " + std::string(what) + ": '" + std::string(s) + "'");
}

}  // namespace

std::string_view to_string(DataType v) { return name_of(kDataTypeNames, v); }
std::string_view to_string(Channel v) { return name_of(kChannelNames, v); }
std::string_view to_string(Aggregate v) { return name_of(kAggregateNames, v); }
std::string_view to_string(Stack v) { return name_of(kStackNames, v); }
std::string_view to_string(ScaleType v) { return name_of(kScaleNames, v); }
std::string_view to_string(MarkType v) { return name_of(kMarkNames, v); }
std::string_view to_string(Coordinates v) { return name_of(kCoordinateNames, v); }
std::string_view to_string(FacetDirection v) { return name_of(kFacetNames, v); }

DataType parse_data_type(std::string_view s) { return parse_name(kDataTypeNames, s, "data type"); }
Channel parse_channel(std::string_view s) { return parse_name(kChannelNames, s, "channel"); }
Aggregate parse_aggregate(std::string_view s) { return parse_name(kAggregateNames, s, "aggregate"); }
Stack parse_stack(std::string_view s) { return parse_name(kStackNames, s, "stack"); }
ScaleType parse_scale_type(std::string_view s) { return parse_name(kScaleNames, s, "scale type"); }
MarkType parse_mark_type(std::string_view s) { return parse_name(kMarkNames, s, "mark type"); }
Coordinates parse_coordinates(std::string_view s) {
    return parse_name(kCoordinateNames, s, "coordinates");
}
FacetDirection parse_facet_direction(std::string_view s) {
    return parse_name(kFacetNames, s, "facet direction");
}

const FieldDef* Dataset::find(std::string_view field) const {
    for (const auto& f : fields) {
        if (f.name == field) return &f;
    }
    return nullptr;
}

const EncodingDef* MarkDef::find(Channel c) const {
    for (const auto& e : encodings) {
        if (e.channel == c) return &e;
    }
    return nullptr;
}

const ScaleDef* ChartSpec::scale_for(Channel c) const {
    for (const auto& s : scales) {
        if (s.channel == c) return &s;
    }
    return nullptr;
}

void check_structure(const ChartSpec& spec) {
    if (spec.marks.empty() || spec.marks.size() > 2) {
        throw StructuralError("a chart has 1 or 2 layers, got " + std::to_string(spec.marks.size()));
    }
    for (const auto& f : spec.dataset.fields) {
        if (f.cardinality < 1) throw StructuralError("field '" + f.name + "' has cardinality < 1");
        if (f.extent && f.extent->min > f.extent->max) {
            throw StructuralError("field '" + f.name + "' has extent min > max");
        }
    }
    for (const auto& mark : spec.marks) {
        if (mark.encodings.empty() || mark.encodings.size() > 4) {
            throw StructuralError("a layer has 1 to 4 encodings, got " +
                                  std::to_string(mark.encodings.size()));
        }
        for (const auto& enc : mark.encodings) {
            const std::string where = "encoding '" + std::string(to_string(enc.channel)) + "'";
            if (enc.is_count()) {
                if (enc.aggregate != Aggregate::count) {
                    throw StructuralError(where + ": count field requires the count aggregate");
                }
            } else if (spec.dataset.find(enc.field) == nullptr) {
                throw StructuralError(where + ": unresolved field '" + enc.field + "'");
            }
            if (enc.bin && enc.aggregate != Aggregate::none) {
                throw StructuralError(where + ": bin and aggregate are mutually exclusive");
            }
            if (enc.bin && *enc.bin < 2) throw StructuralError(where + ": bin count must be >= 2");
        }
    }
    if (spec.facet) {
        if (spec.dataset.find(spec.facet->field) == nullptr) {
            throw StructuralError("facet: unresolved field '" + spec.facet->field + "'");
        }
        if (spec.facet->bin && *spec.facet->bin < 2) {
            throw StructuralError("facet: bin count must be >= 2");
        }
    }
}

ChartSpec canonicalize(ChartSpec spec) {
    for (auto& mark : spec.marks) {
        std::stable_sort(mark.encodings.begin(), mark.encodings.end(),
                         [](const EncodingDef& a, const EncodingDef& b) { return a.channel < b.channel; });
    }
    std::stable_sort(spec.scales.begin(), spec.scales.end(), [](const ScaleDef& a, const ScaleDef& b) {
        return a.channel < b.channel || (a.channel == b.channel && a.stype < b.stype);
    });
    return spec;
}

std::string canonical_key(const ChartSpec& raw) {
    const ChartSpec spec = canonicalize(raw);
    std::string key;
    key.reserve(128);
    auto sep = [&key] { key += '|'; };

    for (const auto& mark : spec.marks) {
        key += to_string(mark.mtype);
        key += ',';
    }
    sep();
    for (const auto& mark : spec.marks) {
        for (const auto& enc : mark.encodings) {
            key += to_string(enc.channel);
            key += ',';
        }
        key += ';';
    }
    sep();
    for (const auto& mark : spec.marks) {
        for (const auto& enc : mark.encodings) {
            key += enc.field;
            key += ',';
        }
        key += ';';
    }
    sep();
    for (const auto& s : spec.scales) {
        key += to_string(s.channel);
        key += ':';
        key += to_string(s.stype);
        key += ',';
    }
    sep();
    for (const auto& mark : spec.marks) {
        for (const auto& enc : mark.encodings) {
            key += to_string(enc.aggregate);
            key += '/';
            key += enc.bin ? std::to_string(*enc.bin) : "-";
            key += '/';
            key += to_string(enc.stack);
            key += ',';
        }
        key += ';';
    }
    sep();
    if (spec.facet) {
        key += to_string(spec.facet->direction);
        key += ':';
        key += spec.facet->field;
        key += ':';
        key += spec.facet->bin ? std::to_string(*spec.facet->bin) : "-";
    }
    sep();
    key += to_string(spec.coordinates);
    sep();
    key += spec.dataset.name;
    return key;
}

std::uint64_t canonical_hash(const ChartSpec& spec) {
    // 64-bit FNV-1a
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : canonical_key(spec)) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::int64_t discrete_cardinality(const FieldDef& field, std::optional<int> bin) {
    if (bin) return std::min<std::int64_t>(*bin, field.cardinality);
    return field.cardinality;
}

}  // namespace vizkb
