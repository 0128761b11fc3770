#include "vizkb/chart_json.hpp"

#include <algorithm>

#include "vizkb/error.hpp"

namespace vizkb {

using nlohmann::json;

namespace {

const json& require(const json& j, const char* key, const char* where) {
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(std::string(where) + ": missing '" + key + "'");
    return *it;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    return it->get<T>();
}

std::optional<int> optional_int(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<int>();
}

}  // namespace

json to_json(const FieldDef& f) {
    json j{{"name", f.name},
           {"type", to_string(f.dtype)},
           {"cardinality", f.cardinality},
           {"entropy", f.entropy},
           {"interesting", f.interesting}};
    if (f.extent) j["extent"] = json::array({f.extent->min, f.extent->max});
    return j;
}

json to_json(const Dataset& d) {
    json fields = json::array();
    for (const auto& f : d.fields) fields.push_back(to_json(f));
    return json{{"name", d.name}, {"rows", d.rows}, {"fields", std::move(fields)}};
}

json to_json(const ChartSpec& spec) {
    json marks = json::array();
    for (const auto& m : spec.marks) {
        json encs = json::array();
        for (const auto& e : m.encodings) {
            json je{{"channel", to_string(e.channel)}, {"field", e.field}};
            if (e.aggregate != Aggregate::none) je["aggregate"] = to_string(e.aggregate);
            if (e.bin) je["bin"] = *e.bin;
            if (e.stack != Stack::none) je["stack"] = to_string(e.stack);
            encs.push_back(std::move(je));
        }
        marks.push_back(json{{"type", to_string(m.mtype)}, {"encodings", std::move(encs)}});
    }
    json scales = json::array();
    for (const auto& s : spec.scales) {
        scales.push_back(json{{"channel", to_string(s.channel)}, {"type", to_string(s.stype)}});
    }
    json j{{"version", kChartSchemaVersion},
           {"dataset", to_json(spec.dataset)},
           {"coordinates", to_string(spec.coordinates)},
           {"marks", std::move(marks)},
           {"scales", std::move(scales)}};
    if (spec.facet) {
        json jf{{"direction", to_string(spec.facet->direction)}, {"field", spec.facet->field}};
        if (spec.facet->bin) jf["bin"] = *spec.facet->bin;
        j["facet"] = std::move(jf);
    }
    return j;
}

FieldDef field_from_json(const json& j) {
    FieldDef f;
    f.name = require(j, "name", "field").get<std::string>();
    f.dtype = parse_data_type(require(j, "type", "field").get<std::string>());
    f.cardinality = get_or<std::int64_t>(j, "cardinality", 1);
    f.entropy = get_or<double>(j, "entropy", 0.0);
    f.interesting = get_or<bool>(j, "interesting", false);
    if (auto it = j.find("extent"); it != j.end() && !it->is_null()) {
        if (!it->is_array() || it->size() != 2) throw ParseError("field extent must be [min, max]");
        f.extent = Extent{(*it)[0].get<double>(), (*it)[1].get<double>()};
    }
    return f;
}

Dataset dataset_from_json(const json& j) {
    Dataset d;
    d.name = get_or<std::string>(j, "name", "");
    for (const auto& jf : require(j, "fields", "dataset")) d.fields.push_back(field_from_json(jf));
    std::int64_t max_card = 1;
    for (const auto& f : d.fields) max_card = std::max(max_card, f.cardinality);
    d.rows = get_or<std::int64_t>(j, "rows", max_card);
    return d;
}

ChartSpec chart_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("chart document must be an object");
    if (auto v = get_or<int>(j, "version", kChartSchemaVersion); v != kChartSchemaVersion) {
        throw ParseError("unsupported chart schema version " + std::to_string(v));
    }
    ChartSpec spec;
    try {
        spec.dataset = dataset_from_json(require(j, "dataset", "chart"));
        spec.coordinates = parse_coordinates(get_or<std::string>(j, "coordinates", "cartesian"));
        for (const auto& jm : require(j, "marks", "chart")) {
            MarkDef m;
            m.mtype = parse_mark_type(require(jm, "type", "mark").get<std::string>());
            for (const auto& je : require(jm, "encodings", "mark")) {
                EncodingDef e;
                e.channel = parse_channel(require(je, "channel", "encoding").get<std::string>());
                e.field = require(je, "field", "encoding").get<std::string>();
                e.aggregate = parse_aggregate(get_or<std::string>(je, "aggregate", "none"));
                e.bin = optional_int(je, "bin");
                e.stack = parse_stack(get_or<std::string>(je, "stack", "none"));
                m.encodings.push_back(std::move(e));
            }
            spec.marks.push_back(std::move(m));
        }
        for (const auto& js : get_or<json>(j, "scales", json::array())) {
            spec.scales.push_back(ScaleDef{parse_channel(require(js, "channel", "scale").get<std::string>()),
                                           parse_scale_type(require(js, "type", "scale").get<std::string>())});
        }
        if (auto it = j.find("facet"); it != j.end() && !it->is_null()) {
            FacetDef f;
            f.direction = parse_facet_direction(require(*it, "direction", "facet").get<std::string>());
            f.field = require(*it, "field", "facet").get<std::string>();
            f.bin = optional_int(*it, "bin");
            spec.facet = std::move(f);
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("chart document: ") + e.what());
    }
    check_structure(spec);
    return spec;
}

}  // namespace vizkb
