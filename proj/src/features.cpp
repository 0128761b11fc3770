#include "vizkb/features.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "vizkb/error.hpp"
#include "vizkb/io.hpp"

namespace vizkb {

using nlohmann::json;

ChartFacts analyze(const ChartSpec& spec) {
    ChartFacts facts;
    facts.spec = &spec;
    facts.layers.reserve(spec.marks.size());
    for (const auto& mark : spec.marks) {
        LayerFacts layer;
        layer.mark = mark.mtype;
        for (const auto& enc : mark.encodings) {
            EncodingFacts ef;
            ef.enc = &enc;
            ef.field = enc.is_count() ? nullptr : spec.dataset.find(enc.field);
            if (const ScaleDef* s = spec.scale_for(enc.channel)) ef.scale = s->stype;
            const bool discrete_scale =
                ef.scale && (*ef.scale == ScaleType::ordinal || *ef.scale == ScaleType::categorical);
            ef.discrete = enc.bin.has_value() || discrete_scale;
            ef.continuous = !ef.discrete && ef.scale.has_value();
            ef.aggregated = enc.aggregate != Aggregate::none;
            ef.cardinality = ef.field ? discrete_cardinality(*ef.field, enc.bin) : 0;
            layer.aggregated = layer.aggregated || ef.aggregated;
            if (enc.channel == Channel::x) layer.x = ef;
            if (enc.channel == Channel::y) layer.y = ef;
            layer.encodings.push_back(ef);
        }
        facts.layers.push_back(std::move(layer));
    }
    return facts;
}

// ---------------------------------------------------------------------------
// FeatureCatalog

FeatureCatalog::FeatureCatalog(std::vector<FeatureDef> defs) : defs_(std::move(defs)) {
    for (std::size_t i = 0; i < defs_.size(); ++i) {
        if (!index_.emplace(defs_[i].name, i).second) {
            throw Error("duplicate feature name in catalog: " + defs_[i].name);
        }
    }
}

bool FeatureCatalog::contains(std::string_view name) const { return index_.find(name) != index_.end(); }

const FeatureDef& FeatureCatalog::at(std::string_view name) const { return defs_[index_of(name)]; }

std::size_t FeatureCatalog::index_of(std::string_view name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw UnknownFeature(std::string(name));
    return it->second;
}

std::vector<std::string> FeatureCatalog::names() const {
    std::vector<std::string> out;
    out.reserve(defs_.size());
    for (const auto& d : defs_) out.push_back(d.name);
    return out;
}

FeatureCatalog FeatureCatalog::subset(const std::vector<std::string>& names) const {
    std::vector<FeatureDef> defs;
    for (const auto& n : names) defs.push_back(at(n));
    return FeatureCatalog(std::move(defs));
}

// ---------------------------------------------------------------------------
// FeatureVector / WeightTable

std::int64_t FeatureVector::get(std::string_view name) const {
    auto it = counts.find(std::string(name));
    return it == counts.end() ? 0 : it->second;
}

std::int64_t FeatureVector::total() const {
    std::int64_t t = 0;
    for (const auto& [_, c] : counts) t += c;
    return t;
}

FeatureVector FeatureVector::operator+(const FeatureVector& other) const {
    FeatureVector out = *this;
    for (const auto& [k, c] : other.counts) out.counts[k] += c;
    return out;
}

std::string_view to_string(WeightProvenance p) {
    switch (p) {
        case WeightProvenance::builtin: return "builtin";
        case WeightProvenance::learned: return "learned";
        case WeightProvenance::manual: return "manual";
    }
    return "builtin";
}

WeightProvenance parse_weight_provenance(std::string_view s) {
    if (s == "builtin") return WeightProvenance::builtin;
    if (s == "learned") return WeightProvenance::learned;
    if (s == "manual") return WeightProvenance::manual;
    throw ParseError("unknown weight provenance: " + std::string(s));
}

std::optional<std::int64_t> WeightTable::find(std::string_view name) const {
    auto it = weights.find(std::string(name));
    if (it == weights.end()) return std::nullopt;
    return it->second;
}

// ---------------------------------------------------------------------------
// Built-in catalog

namespace {

std::int64_t count_encodings(const ChartFacts& f, const std::function<bool(const EncodingFacts&)>& pred) {
    std::int64_t n = 0;
    for (const auto& layer : f.layers) {
        for (const auto& e : layer.encodings) n += pred(e) ? 1 : 0;
    }
    return n;
}

std::int64_t count_layers(const ChartFacts& f, const std::function<bool(const LayerFacts&)>& pred) {
    std::int64_t n = 0;
    for (const auto& layer : f.layers) n += pred(layer) ? 1 : 0;
    return n;
}

bool uses_channel(const ChartFacts& f, Channel c) {
    for (const auto& layer : f.layers) {
        for (const auto& e : layer.encodings) {
            if (e.enc->channel == c) return true;
        }
    }
    return false;
}

std::int64_t scale_is(const ChartFacts& f, Channel c, ScaleType t) {
    if (!uses_channel(f, c)) return 0;
    const ScaleDef* s = f.spec->scale_for(c);
    return s && s->stype == t ? 1 : 0;
}

// One continuous and one discrete positional channel. Returns the discrete one.
const EncodingFacts* continuous_by_discrete(const LayerFacts& l) {
    if (!l.x || !l.y) return nullptr;
    if (l.x->continuous && l.y->discrete) return &*l.y;
    if (l.y->continuous && l.x->discrete) return &*l.x;
    return nullptr;
}

// Unaggregated marks overlap when the data has more rows than the discrete axis has
// distinct positions.
bool overlaps(const ChartFacts& f, const LayerFacts& l, const EncodingFacts& discrete_axis) {
    return !l.aggregated && f.spec->dataset.rows > discrete_axis.cardinality;
}

void add_cd_features(std::vector<FeatureDef>& defs, MarkType m, int w_no_overlap, int w_overlap) {
    const std::string mark(to_string(m));
    defs.push_back({"c_d_no_overlap_" + mark,
                    [m](const ChartFacts& f) {
                        return count_layers(f, [&](const LayerFacts& l) {
                            const EncodingFacts* d = continuous_by_discrete(l);
                            return l.mark == m && d && !overlaps(f, l, *d);
                        });
                    },
                    w_no_overlap,
                    mark + " mark with a continuous and a discrete position channel, no overlap"});
    defs.push_back({"c_d_overlap_" + mark,
                    [m](const ChartFacts& f) {
                        return count_layers(f, [&](const LayerFacts& l) {
                            const EncodingFacts* d = continuous_by_discrete(l);
                            return l.mark == m && d && overlaps(f, l, *d);
                        });
                    },
                    w_overlap,
                    mark + " mark with a continuous and a discrete position channel, overlapping"});
}

FeatureCatalog make_builtin_catalog() {
    std::vector<FeatureDef> defs;
    auto enc_feature = [&defs](std::string name, int w, std::string desc,
                               std::function<bool(const EncodingFacts&)> pred) {
        defs.push_back({std::move(name),
                        [pred = std::move(pred)](const ChartFacts& f) { return count_encodings(f, pred); }, w,
                        std::move(desc)});
    };
    auto on = [](Channel c) { return [c](const EncodingFacts& e) { return e.enc->channel == c; }; };

    // mark usage
    const std::pair<MarkType, int> mark_weights[] = {{MarkType::point, 0}, {MarkType::bar, 4},
                                                     {MarkType::line, 6},  {MarkType::area, 10},
                                                     {MarkType::tick, 5},  {MarkType::rect, 8}};
    for (const auto& [m, w] : mark_weights) {
        defs.push_back({"value_" + std::string(to_string(m)),
                        [m = m](const ChartFacts& f) {
                            return count_layers(f, [m](const LayerFacts& l) { return l.mark == m; });
                        },
                        w, "layer uses a " + std::string(to_string(m)) + " mark"});
    }

    // channel usage
    const std::pair<Channel, int> channel_weights[] = {{Channel::x, 0},    {Channel::y, 0},
                                                       {Channel::color, 6}, {Channel::size, 10},
                                                       {Channel::shape, 12}, {Channel::text, 15}};
    for (const auto& [c, w] : channel_weights) {
        enc_feature("encoding_" + std::string(to_string(c)), w,
                    "encoding on the " + std::string(to_string(c)) + " channel", on(c));
    }
    enc_feature("encoding", 1, "any encoding", [](const EncodingFacts&) { return true; });

    // data transformations
    enc_feature("aggregate", 2, "aggregated encoding", [](const EncodingFacts& e) { return e.aggregated; });
    enc_feature("aggregate_count", 1, "count aggregate",
                [](const EncodingFacts& e) { return e.enc->aggregate == Aggregate::count; });
    enc_feature("aggregate_mean", 3, "mean aggregate",
                [](const EncodingFacts& e) { return e.enc->aggregate == Aggregate::mean; });
    enc_feature("aggregate_sum", 4, "sum aggregate",
                [](const EncodingFacts& e) { return e.enc->aggregate == Aggregate::sum; });
    enc_feature("bin", 3, "binned encoding", [](const EncodingFacts& e) { return e.enc->bin.has_value(); });
    enc_feature("bin_high", 2, "binned with 12 or more bins",
                [](const EncodingFacts& e) { return e.enc->bin && *e.enc->bin >= kBinHighThreshold; });
    enc_feature("bin_low", 0, "binned with fewer than 12 bins",
                [](const EncodingFacts& e) { return e.enc->bin && *e.enc->bin < kBinHighThreshold; });

    // scales
    const std::tuple<const char*, Channel, ScaleType, int> scale_features[] = {
        {"log_x", Channel::x, ScaleType::log, 4},
        {"log_y", Channel::y, ScaleType::log, 4},
        {"linear_x", Channel::x, ScaleType::linear, 0},
        {"linear_y", Channel::y, ScaleType::linear, 0},
        {"log_color", Channel::color, ScaleType::log, 8},
        {"log_size", Channel::size, ScaleType::log, 8},
        {"ordinal_x", Channel::x, ScaleType::ordinal, 1},
        {"ordinal_y", Channel::y, ScaleType::ordinal, 1},
        {"categorical_color", Channel::color, ScaleType::categorical, 0},
    };
    for (const auto& [name, c, t, w] : scale_features) {
        defs.push_back({name, [c = c, t = t](const ChartFacts& f) { return scale_is(f, c, t); }, w,
                        std::string(to_string(t)) + " scale on " + std::string(to_string(c))});
    }

    // continuous x discrete layouts
    add_cd_features(defs, MarkType::point, 2, 10);
    add_cd_features(defs, MarkType::bar, 0, 20);
    add_cd_features(defs, MarkType::line, 8, 25);
    add_cd_features(defs, MarkType::area, 10, 25);
    add_cd_features(defs, MarkType::tick, 3, 6);

    const std::pair<MarkType, int> cc_weights[] = {{MarkType::point, 0}, {MarkType::line, 12}, {MarkType::area, 20}};
    for (const auto& [m, w] : cc_weights) {
        defs.push_back({"c_c_" + std::string(to_string(m)),
                        [m = m](const ChartFacts& f) {
                            return count_layers(f, [m](const LayerFacts& l) {
                                return l.mark == m && l.x && l.y && l.x->continuous && l.y->continuous;
                            });
                        },
                        w, std::string(to_string(m)) + " mark with two continuous position channels"});
    }
    const std::pair<MarkType, int> dd_weights[] = {{MarkType::rect, 2}, {MarkType::point, 6}};
    for (const auto& [m, w] : dd_weights) {
        defs.push_back({"d_d_" + std::string(to_string(m)),
                        [m = m](const ChartFacts& f) {
                            return count_layers(f, [m](const LayerFacts& l) {
                                return l.mark == m && l.x && l.y && l.x->discrete && l.y->discrete;
                            });
                        },
                        w, std::string(to_string(m)) + " mark with two discrete position channels"});
    }

    // value-task channel preferences
    const std::pair<Channel, int> vc[] = {{Channel::x, -2}, {Channel::y, -2}, {Channel::color, 5}};
    for (const auto& [c, w] : vc) {
        enc_feature("value_continuous_" + std::string(to_string(c)), w,
                    "unaggregated continuous data on " + std::string(to_string(c)),
                    [c = c](const EncodingFacts& e) { return e.enc->channel == c && e.continuous && !e.aggregated; });
    }
    const std::pair<Channel, int> vd[] = {{Channel::x, 1}, {Channel::y, 1}};
    for (const auto& [c, w] : vd) {
        enc_feature("value_discrete_" + std::string(to_string(c)), w,
                    "discrete data on " + std::string(to_string(c)),
                    [c = c](const EncodingFacts& e) { return e.enc->channel == c && e.discrete; });
    }
    const std::pair<Channel, int> interesting[] = {{Channel::x, -3}, {Channel::y, -2}, {Channel::color, 2}};
    for (const auto& [c, w] : interesting) {
        enc_feature("interesting_" + std::string(to_string(c)), w,
                    "field of interest on " + std::string(to_string(c)),
                    [c = c](const EncodingFacts& e) {
                        return e.enc->channel == c && e.field != nullptr && e.field->interesting;
                    });
    }

    // facets
    const std::tuple<const char*, Channel, FacetDirection, int> facet_channel[] = {
        {"x_row", Channel::x, FacetDirection::row, 3},
        {"y_row", Channel::y, FacetDirection::row, 5},
        {"x_col", Channel::x, FacetDirection::col, 5},
        {"y_col", Channel::y, FacetDirection::col, 3},
    };
    for (const auto& [name, c, d, w] : facet_channel) {
        defs.push_back({name,
                        [c = c, d = d](const ChartFacts& f) -> std::int64_t {
                            return f.spec->facet && f.spec->facet->direction == d && uses_channel(f, c) ? 1 : 0;
                        },
                        w,
                        std::string(to_string(c)) + " channel with " + std::string(to_string(d)) + " facets"});
    }
    for (auto [name, d, w] : {std::tuple{"facet_row", FacetDirection::row, 6},
                              std::tuple{"facet_col", FacetDirection::col, 6}}) {
        defs.push_back({name,
                        [d = d](const ChartFacts& f) -> std::int64_t {
                            return f.spec->facet && f.spec->facet->direction == d ? 1 : 0;
                        },
                        w, std::string(to_string(d)) + " facets"});
    }

    // cardinality
    enc_feature("horizontal_scrolling_x", 30, "high-cardinality discrete field on x", [](const EncodingFacts& e) {
        return e.enc->channel == Channel::x && e.discrete && e.cardinality > kHighCardinality;
    });
    enc_feature("high_cardinality_shape", 40, "high-cardinality field on shape", [](const EncodingFacts& e) {
        return e.enc->channel == Channel::shape && e.discrete && e.cardinality > kHighCardinality;
    });
    enc_feature("high_cardinality_color", 30, "high-cardinality discrete field on color",
                [](const EncodingFacts& e) {
                    return e.enc->channel == Channel::color && e.discrete && e.cardinality > kHighCardinality;
                });

    // layout
    defs.push_back({"polar",
                    [](const ChartFacts& f) -> std::int64_t {
                        return f.spec->coordinates == Coordinates::polar ? 1 : 0;
                    },
                    50, "polar coordinates"});
    defs.push_back({"multi_layer",
                    [](const ChartFacts& f) -> std::int64_t { return f.layers.size() > 1 ? 1 : 0; }, 8,
                    "more than one layer"});

    return FeatureCatalog(std::move(defs));
}

}  // namespace

const FeatureCatalog& builtin_catalog() {
    static const FeatureCatalog catalog = make_builtin_catalog();
    return catalog;
}

WeightTable default_weights(const FeatureCatalog& catalog) {
    WeightTable w;
    for (const auto& def : catalog.features()) w.weights[def.name] = def.default_weight;
    w.provenance = WeightProvenance::builtin;
    return w;
}

FeatureVector extract_features(const ChartFacts& facts, const FeatureCatalog& catalog) {
    FeatureVector fv;
    for (const auto& def : catalog.features()) {
        if (std::int64_t c = def.predicate(facts); c != 0) fv.counts.emplace(def.name, c);
    }
    return fv;
}

FeatureVector extract_features(const ChartSpec& spec, const FeatureCatalog& catalog) {
    return extract_features(analyze(spec), catalog);
}

std::int64_t cost(const FeatureVector& fv, const WeightTable& w) {
    std::int64_t total = 0;
    for (const auto& [name, count] : fv.counts) {
        auto weight = w.find(name);
        if (!weight) throw Error("no weight for feature '" + name + "'");
        total += *weight * count;
    }
    return total;
}

std::vector<double> dense(const FeatureVector& fv, const FeatureCatalog& catalog) {
    std::vector<double> out(catalog.size(), 0.0);
    for (const auto& [name, count] : fv.counts) {
        if (catalog.contains(name)) out[catalog.index_of(name)] = static_cast<double>(count);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Serialization

json catalog_to_json(const FeatureCatalog& catalog, const WeightTable& w) {
    json arr = json::array();
    for (const auto& def : catalog.features()) {
        json j{{"name", def.name}, {"description", def.description}};
        if (auto v = w.find(def.name)) j["weight"] = *v;
        else j["weight"] = nullptr;
        arr.push_back(std::move(j));
    }
    return arr;
}

json to_json(const FeatureVector& fv) {
    json j = json::object();
    for (const auto& [k, v] : fv.counts) j[k] = v;
    return j;
}

json to_json(const WeightTable& w) {
    json weights = json::object();
    for (const auto& [k, v] : w.weights) weights[k] = v;
    return json{{"version", w.version}, {"provenance", to_string(w.provenance)}, {"weights", std::move(weights)}};
}

WeightTable weights_from_json(const json& j) {
    WeightTable w;
    try {
        w.version = j.value("version", 1);
        w.provenance = parse_weight_provenance(j.value("provenance", std::string("manual")));
        for (const auto& [k, v] : j.at("weights").items()) w.weights[k] = v.get<std::int64_t>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("weight table: ") + e.what());
    }
    return w;
}

std::string weights_to_csv(const WeightTable& w, std::optional<std::uint64_t> seed) {
    std::ostringstream out;
    if (seed) out << "# seed: " << *seed << '\n';
    out << "feature,weight\n";
    for (const auto& [k, v] : w.weights) out << k << ',' << v << '\n';
    return out.str();
}

WeightTable weights_from_csv(std::string_view text) {
    WeightTable w;
    w.provenance = WeightProvenance::manual;
    std::istringstream in{std::string(text)};
    std::string line;
    bool header = true;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (header) {
            header = false;
            if (line.rfind("feature", 0) == 0) continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw ParseError("weights csv line " + std::to_string(lineno) + ": no comma");
        std::string value = line.substr(comma + 1);
        while (!value.empty() && value.back() == ' ') value.pop_back();
        std::int64_t v = 0;
        const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
        if (ec != std::errc{} || end != value.data() + value.size() || value.empty()) {
            throw ParseError("weights csv line " + std::to_string(lineno) + ": bad weight '" + value + "'");
        }
        w.weights[line.substr(0, comma)] = v;
    }
    return w;
}

WeightTable load_weights(const std::string& path, const FeatureCatalog& catalog) {
    if (path == "builtin") return default_weights(catalog);
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") return weights_from_json(read_json(path));
    return weights_from_csv(read_file(path));
}

void save_weights(const std::string& path, const WeightTable& w, std::optional<std::uint64_t> seed) {
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
        json j = to_json(w);
        if (seed) j["seed"] = *seed;
        write_file(path, j.dump(2) + "\n");
    } else {
        write_file(path, weights_to_csv(w, seed));
    }
}

}  // namespace vizkb
