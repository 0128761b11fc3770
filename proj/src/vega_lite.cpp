#include "vizkb/vega_lite.hpp"

namespace vizkb {

using nlohmann::json;

namespace {

std::string vl_type(const ChartSpec& spec, const EncodingDef& e) {
    if (e.is_count() || e.aggregate != Aggregate::none) return "quantitative";
    const FieldDef* f = spec.dataset.find(e.field);
    const ScaleDef* s = spec.scale_for(e.channel);
    if (f->dtype == DataType::datetime) return s && s->stype == ScaleType::ordinal ? "ordinal" : "temporal";
    if (f->dtype == DataType::number) {
        if (e.bin) return s && s->stype == ScaleType::ordinal ? "ordinal" : "quantitative";
        return "quantitative";
    }
    return s && s->stype == ScaleType::ordinal ? "ordinal" : "nominal";
}

json channel_def(const ChartSpec& spec, const EncodingDef& e) {
    json d{{"type", vl_type(spec, e)}};
    if (e.is_count()) {
        d["aggregate"] = "count";
    } else {
        d["field"] = e.field;
        if (e.aggregate != Aggregate::none) d["aggregate"] = to_string(e.aggregate);
    }
    if (e.bin) d["bin"] = {{"maxbins", *e.bin}};
    if (e.stack != Stack::none) d["stack"] = to_string(e.stack);
    if (const ScaleDef* s = spec.scale_for(e.channel)) {
        if (s->stype == ScaleType::log) d["scale"] = {{"type", "log"}};
        else if (s->stype == ScaleType::linear && !e.bin) d["scale"] = {{"type", "linear"}};
    }
    return d;
}

json layer_spec(const ChartSpec& spec, const MarkDef& m) {
    json enc = json::object();
    for (const auto& e : m.encodings) enc[std::string(to_string(e.channel))] = channel_def(spec, e);
    return {{"mark", to_string(m.mtype)}, {"encoding", std::move(enc)}};
}

}  // namespace

json to_vega_lite(const ChartSpec& spec) {
    json body;
    if (spec.marks.size() == 1) {
        body = layer_spec(spec, spec.marks.front());
    } else {
        json layers = json::array();
        for (const auto& m : spec.marks) layers.push_back(layer_spec(spec, m));
        body = {{"layer", std::move(layers)}};
    }
    json doc{{"$schema", kVegaLiteSchema}, {"data", {{"name", spec.dataset.name}}}};
    if (spec.facet) {
        const FieldDef* f = spec.dataset.find(spec.facet->field);
        json fd{{"field", spec.facet->field}};
        if (spec.facet->bin) {
            fd["bin"] = {{"maxbins", *spec.facet->bin}};
            fd["type"] = "ordinal";
        } else {
            fd["type"] = f && f->dtype == DataType::number ? "quantitative" : "nominal";
        }
        doc["facet"] = {{spec.facet->direction == FacetDirection::row ? "row" : "column", std::move(fd)}};
        doc["spec"] = std::move(body);
    } else {
        doc.update(body);
    }
    if (spec.coordinates == Coordinates::polar) doc["usermeta"] = {{"coordinates", "polar"}};
    return doc;
}

}  // namespace vizkb
