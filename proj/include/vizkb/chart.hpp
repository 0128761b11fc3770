#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vizkb {

enum class DataType { number, string, datetime, boolean };
enum class Channel { x, y, color, size, shape, text };
enum class Aggregate { none, count, mean, sum };
enum class Stack { none, zero, normalize };
enum class ScaleType { linear, log, ordinal, categorical };
enum class MarkType { point, bar, line, area, tick, rect };
enum class Coordinates { cartesian, polar };
enum class FacetDirection { row, col };

inline constexpr std::array kAllChannels = {Channel::x,     Channel::y,     Channel::color,
                                            Channel::size,  Channel::shape, Channel::text};
inline constexpr std::array kAllMarks = {MarkType::point, MarkType::bar,  MarkType::line,
                                         MarkType::area,  MarkType::tick, MarkType::rect};
inline constexpr std::array kAllScaleTypes = {ScaleType::linear, ScaleType::log,
                                              ScaleType::ordinal, ScaleType::categorical};

std::string_view to_string(DataType v);
std::string_view to_string(Channel v);
std::string_view to_string(Aggregate v);
std::string_view to_string(Stack v);
std::string_view to_string(ScaleType v);
std::string_view to_string(MarkType v);
std::string_view to_string(Coordinates v);
std::string_view to_string(FacetDirection v);

// Parsers throw ParseError on unknown names.
DataType parse_data_type(std::string_view s);
Channel parse_channel(std::string_view s);
Aggregate parse_aggregate(std::string_view s);
Stack parse_stack(std::string_view s);
ScaleType parse_scale_type(std::string_view s);
MarkType parse_mark_type(std::string_view s);
Coordinates parse_coordinates(std::string_view s);
FacetDirection parse_facet_direction(std::string_view s);

struct Extent {
    double min = 0.0;
    double max = 0.0;
    bool operator==(const Extent&) const = default;
};

struct FieldDef {
    std::string name;
    DataType dtype = DataType::number;
    std::int64_t cardinality = 1;
    double entropy = 0.0;
    std::optional<Extent> extent;
    bool interesting = false;
    bool operator==(const FieldDef&) const = default;
};

struct Dataset {
    std::string name;
    std::int64_t rows = 1;
    std::vector<FieldDef> fields;

    const FieldDef* find(std::string_view field) const;
    bool operator==(const Dataset&) const = default;
};

// Field reference used by encodings that count records instead of reading a field.
inline constexpr std::string_view kCountField = "__count__";

struct EncodingDef {
    Channel channel = Channel::x;
    std::string field;
    Aggregate aggregate = Aggregate::none;
    std::optional<int> bin;
    Stack stack = Stack::none;

    bool is_count() const { return field == kCountField; }
    bool operator==(const EncodingDef&) const = default;
};

struct ScaleDef {
    Channel channel = Channel::x;
    ScaleType stype = ScaleType::linear;
    bool operator==(const ScaleDef&) const = default;
};

struct MarkDef {
    MarkType mtype = MarkType::point;
    std::vector<EncodingDef> encodings;

    const EncodingDef* find(Channel c) const;
    bool operator==(const MarkDef&) const = default;
};

struct FacetDef {
    FacetDirection direction = FacetDirection::row;
    std::string field;
    std::optional<int> bin;
    bool operator==(const FacetDef&) const = default;
};

struct ChartSpec {
    Dataset dataset;
    Coordinates coordinates = Coordinates::cartesian;
    std::vector<MarkDef> marks;
    std::vector<ScaleDef> scales;
    std::optional<FacetDef> facet;

    // First scale declared for the channel, if any.
    const ScaleDef* scale_for(Channel c) const;
    bool operator==(const ChartSpec&) const = default;
};

// Throws StructuralError when field references do not resolve or encoding-level
// invariants are broken (count sentinel without count aggregate, bin together with
// an aggregate, layer/encoding counts out of range, bin count below 2).
void check_structure(const ChartSpec& spec);

// Canonical form: encodings sorted by channel, scales sorted by channel. Two specs
// describing the same design have the same canonical form.
ChartSpec canonicalize(ChartSpec spec);

// Ordering key: mark types, then channels, then field names, then scale types,
// then the remaining attributes. Comparing keys gives the canonical order.
std::string canonical_key(const ChartSpec& spec);
std::uint64_t canonical_hash(const ChartSpec& spec);

// Effective number of distinct values an encoding or facet produces when discrete.
std::int64_t discrete_cardinality(const FieldDef& field, std::optional<int> bin);

}  // namespace vizkb
