#include "vizkb/enumerator.hpp"

#include <algorithm>
#include <map>
#include <queue>

#include "vizkb/chart_json.hpp"
#include "vizkb/error.hpp"
#include "vizkb/hard_constraints.hpp"

namespace vizkb {

using nlohmann::json;

namespace {

constexpr int kBinChoices[] = {10, 25};

struct Transform {
    Aggregate aggregate = Aggregate::none;
    std::optional<int> bin;
};

std::vector<Transform> transforms_for(const FieldDef* field) {
    if (field == nullptr) return {{Aggregate::count, std::nullopt}};
    if (field->dtype != DataType::number) return {{Aggregate::none, std::nullopt}};
    std::vector<Transform> out = {{Aggregate::none, std::nullopt},
                                  {Aggregate::mean, std::nullopt},
                                  {Aggregate::sum, std::nullopt}};
    for (int b : kBinChoices) out.push_back({Aggregate::none, b});
    return out;
}

bool discrete_dtype(DataType t) { return t == DataType::string || t == DataType::boolean; }

// Mirrors H2 and H3 for a single encoding.
bool scale_allowed(const EncodingDef& enc, const FieldDef* field, ScaleType s) {
    const bool count = enc.is_count();
    switch (s) {
        case ScaleType::log:
            return count || (field->dtype == DataType::number && !enc.bin && field->extent &&
                             field->extent->min > 0);
        case ScaleType::linear:
            if (enc.channel == Channel::shape) return false;
            return count || enc.bin || !discrete_dtype(field->dtype);
        case ScaleType::ordinal:
        case ScaleType::categorical:
            return !count && (enc.bin || discrete_dtype(field->dtype));
    }
    return false;
}

struct ConstructivePrune {
    std::set<MarkType> forbidden_marks;
    std::set<std::pair<Channel, ScaleType>> forbidden_scales;
};

ConstructivePrune prune_from_forbid(const std::set<std::string>& forbid) {
    ConstructivePrune p;
    for (MarkType m : kAllMarks) {
        if (forbid.count("value_" + std::string(to_string(m)))) p.forbidden_marks.insert(m);
    }
    // Scale features are 1 exactly when the channel is used with that scale type.
    const std::tuple<const char*, Channel, ScaleType> scale_features[] = {
        {"log_x", Channel::x, ScaleType::log},         {"log_y", Channel::y, ScaleType::log},
        {"linear_x", Channel::x, ScaleType::linear},   {"linear_y", Channel::y, ScaleType::linear},
        {"log_color", Channel::color, ScaleType::log}, {"log_size", Channel::size, ScaleType::log},
        {"ordinal_x", Channel::x, ScaleType::ordinal}, {"ordinal_y", Channel::y, ScaleType::ordinal},
        {"categorical_color", Channel::color, ScaleType::categorical},
    };
    for (const auto& [name, c, s] : scale_features) {
        if (forbid.count(name)) p.forbidden_scales.insert({c, s});
    }
    return p;
}

struct Candidate {
    std::int64_t cost = 0;
    std::string key;
    ChartSpec spec;
};

struct WorseLast {
    bool operator()(const Candidate& a, const Candidate& b) const {
        return a.cost < b.cost || (a.cost == b.cost && a.key < b.key);
    }
};

class Search {
public:
    Search(const PartialSpec& p, const EnumerationBounds& b, const FeatureCatalog& catalog,
           const WeightTable* weights, const std::set<std::string>& force, const std::set<std::string>& forbid)
        : p_(p), bounds_(b), catalog_(catalog), weights_(weights), force_(force), forbid_(forbid),
          prune_(prune_from_forbid(forbid)) {
        need_features_ = bounds_.max_feature_count || bounds_.cost_cap || weights_ || !force_.empty() ||
                         !forbid_.empty();
        for (const auto& [tok, n] : p_.required) {
            if (tok.rfind("mark.", 0) == 0) required_marks_[parse_mark_type(tok.substr(5))] += n;
        }
        int total = 0;
        for (const auto& [_, n] : required_marks_) total += n;
        marks_saturated_ = total >= static_cast<int>(p_.layers.size());
        current_.dataset = p_.dataset;
    }

    Enumeration run() {
        current_.coordinates = p_.coordinates.value_or(Coordinates::cartesian);
        current_.marks.assign(p_.layers.size(), MarkDef{});
        layer(0);
        Enumeration out;
        out.matched = matched_;
        out.nodes = nodes_;
        out.specs.reserve(heap_.size());
        std::vector<Candidate> kept;
        kept.reserve(heap_.size());
        while (!heap_.empty()) {
            kept.push_back(std::move(const_cast<Candidate&>(heap_.top())));
            heap_.pop();
        }
        std::sort(kept.begin(), kept.end(), [](const Candidate& a, const Candidate& b) { return a.key < b.key; });
        kept.erase(std::unique(kept.begin(), kept.end(),
                               [](const Candidate& a, const Candidate& b) { return a.key == b.key; }),
                   kept.end());
        for (auto& c : kept) out.specs.push_back(std::move(c.spec));
        return out;
    }

private:
    void tick() {
        if (++nodes_ > bounds_.node_cap) {
            throw BudgetExceeded("enumeration exceeded the node budget of " + std::to_string(bounds_.node_cap));
        }
    }

    bool mark_allowed(MarkType m) const {
        if (prune_.forbidden_marks.count(m)) return false;
        if (marks_saturated_ && !required_marks_.count(m)) return false;
        return true;
    }

    void layer(std::size_t li) {
        tick();
        if (li == p_.layers.size()) {
            scales();
            return;
        }
        const LayerFrame& frame = p_.layers[li];
        for (MarkType m : kAllMarks) {
            if (!mark_allowed(m)) continue;
            current_.marks[li].mtype = m;
            // channel subsets of the requested size, as bitmasks in ascending channel order
            const int n = frame.encoding_count;
            for (unsigned mask = 0; mask < (1u << kAllChannels.size()); ++mask) {
                if (__builtin_popcount(mask) != n) continue;
                if (!subset_ok(frame, m, mask)) continue;
                std::vector<Channel> chans;
                for (std::size_t c = 0; c < kAllChannels.size(); ++c) {
                    if (mask & (1u << c)) chans.push_back(kAllChannels[c]);
                }
                current_.marks[li].encodings.assign(chans.size(), EncodingDef{});
                std::set<std::string> used;
                for (const auto& b : frame.bindings) used.insert(b.field);
                encodings(li, chans, 0, used);
            }
        }
        current_.marks[li].encodings.clear();
    }

    bool subset_ok(const LayerFrame& frame, MarkType m, unsigned mask) const {
        for (const auto& b : frame.bindings) {
            if (!(mask & (1u << static_cast<unsigned>(b.channel)))) return false;
        }
        const bool positional = mask & 0b11u;
        if (!positional && (m == MarkType::bar || m == MarkType::area || m == MarkType::line)) return false;
        return true;
    }

    const Binding* binding_for(std::size_t li, Channel c) const {
        for (const auto& b : p_.layers[li].bindings) {
            if (b.channel == c) return &b;
        }
        return nullptr;
    }

    // Can the remaining encoding slots (and the facet) still cover every use_field?
    bool coverage_possible(std::size_t li, std::size_t filled) const {
        if (p_.use_fields.empty()) return true;
        std::size_t slots = p_.layers[li].encoding_count - filled;
        for (std::size_t l = li + 1; l < p_.layers.size(); ++l) slots += p_.layers[l].encoding_count;
        std::size_t missing = 0;
        bool facet_slot = false;
        for (const auto& name : p_.use_fields) {
            bool found = false;
            for (std::size_t l = 0; l <= li && !found; ++l) {
                const auto& encs = current_.marks[l].encodings;
                const std::size_t n = l == li ? filled : encs.size();
                for (std::size_t e = 0; e < n && !found; ++e) found = encs[e].field == name;
            }
            if (found) continue;
            const FieldDef* f = p_.dataset.find(name);
            const bool facetable = p_.facet != FacetMode::forbidden && f &&
                                   (discrete_dtype(f->dtype) || (p_.facet_field && *p_.facet_field == name));
            if (facetable && !facet_slot && (!p_.facet_field || *p_.facet_field == name)) {
                facet_slot = true;
                continue;
            }
            ++missing;
        }
        return missing <= slots;
    }

    void encodings(std::size_t li, const std::vector<Channel>& chans, std::size_t ei, std::set<std::string>& used) {
        tick();
        if (!coverage_possible(li, ei)) return;
        if (ei == chans.size()) {
            layer(li + 1);
            return;
        }
        EncodingDef& enc = current_.marks[li].encodings[ei];
        enc = EncodingDef{};
        enc.channel = chans[ei];
        auto try_field = [&](const std::string& name) {
            const FieldDef* field = name == kCountField ? nullptr : p_.dataset.find(name);
            for (const Transform& t : transforms_for(field)) {
                enc.field = name;
                enc.aggregate = t.aggregate;
                enc.bin = t.bin;
                enc.stack = Stack::none;
                encodings(li, chans, ei + 1, used);
            }
        };
        if (const Binding* b = binding_for(li, chans[ei])) {
            try_field(b->field);
            return;
        }
        for (const auto& f : p_.dataset.fields) {
            if (used.count(f.name)) continue;
            used.insert(f.name);
            try_field(f.name);
            used.erase(f.name);
        }
        const std::string count(kCountField);
        if (!used.count(count)) {
            used.insert(count);
            try_field(count);
            used.erase(count);
        }
    }

    void scales() {
        std::set<Channel> chans;
        for (const auto& m : current_.marks) {
            for (const auto& e : m.encodings) chans.insert(e.channel);
        }
        scale_channels_.assign(chans.begin(), chans.end());
        current_.scales.assign(scale_channels_.size(), ScaleDef{});
        scale(0);
    }

    void scale(std::size_t si) {
        tick();
        if (si == scale_channels_.size()) {
            facets();
            return;
        }
        const Channel c = scale_channels_[si];
        for (ScaleType s : kAllScaleTypes) {
            if (prune_.forbidden_scales.count({c, s})) continue;
            bool ok = true;
            for (const auto& m : current_.marks) {
                for (const auto& e : m.encodings) {
                    if (e.channel != c) continue;
                    const FieldDef* f = e.is_count() ? nullptr : p_.dataset.find(e.field);
                    ok = ok && scale_allowed(e, f, s);
                }
            }
            if (!ok) continue;
            current_.scales[si] = ScaleDef{c, s};
            scale(si + 1);
        }
    }

    void facets() {
        if (p_.facet != FacetMode::required) {
            current_.facet.reset();
            leaf();
        }
        if (p_.facet == FacetMode::forbidden) return;
        for (FacetDirection d : {FacetDirection::row, FacetDirection::col}) {
            for (const auto& f : p_.dataset.fields) {
                if (p_.facet_field && *p_.facet_field != f.name) continue;
                if (discrete_dtype(f.dtype)) {
                    tick();
                    current_.facet = FacetDef{d, f.name, std::nullopt};
                    leaf();
                } else if (p_.facet_field && f.dtype == DataType::number) {
                    // binned facets only when the partial names the field
                    for (int b : kBinChoices) {
                        tick();
                        current_.facet = FacetDef{d, f.name, b};
                        leaf();
                    }
                }
            }
        }
        current_.facet.reset();
    }

    bool fields_covered() const {
        for (const auto& name : p_.use_fields) {
            bool found = current_.facet && current_.facet->field == name;
            for (const auto& m : current_.marks) {
                for (const auto& e : m.encodings) found = found || e.field == name;
            }
            if (!found) return false;
        }
        return true;
    }

    void leaf() {
        if (!fields_covered()) return;
        if (!validate(current_).empty()) return;
        if (!p_.required.empty() && !contains(abstract_primitives(current_), p_.required)) return;
        std::int64_t c = 0;
        if (need_features_) {
            const FeatureVector fv = extract_features(current_, catalog_);
            if (bounds_.max_feature_count && fv.total() > *bounds_.max_feature_count) return;
            for (const auto& f : force_) {
                if (!fv.has(f)) return;
            }
            for (const auto& f : forbid_) {
                if (fv.has(f)) return;
            }
            if (weights_) {
                c = cost(fv, *weights_);
                if (bounds_.cost_cap && c > *bounds_.cost_cap) return;
            }
        }
        ++matched_;
        Candidate cand{c, canonical_key(current_), {}};
        if (heap_.size() >= bounds_.max_results) {
            if (!WorseLast{}(cand, heap_.top())) return;
            cand.spec = current_;
            heap_.push(std::move(cand));
            heap_.pop();
            return;
        }
        cand.spec = current_;
        heap_.push(std::move(cand));
    }

    const PartialSpec& p_;
    const EnumerationBounds& bounds_;
    const FeatureCatalog& catalog_;
    const WeightTable* weights_;
    const std::set<std::string>& force_;
    const std::set<std::string>& forbid_;
    ConstructivePrune prune_;
    bool need_features_ = false;
    std::map<MarkType, int> required_marks_;
    bool marks_saturated_ = false;

    ChartSpec current_;
    std::vector<Channel> scale_channels_;
    std::size_t nodes_ = 0;
    std::size_t matched_ = 0;
    std::priority_queue<Candidate, std::vector<Candidate>, WorseLast> heap_;
};

}  // namespace

void check_partial(const PartialSpec& p) {
    if (p.layers.empty() || p.layers.size() > 2) throw Error("partial spec needs 1 or 2 layers");
    for (const auto& frame : p.layers) {
        if (frame.encoding_count < 1 || frame.encoding_count > 4) {
            throw Error("partial spec layers need 1 to 4 encodings");
        }
        std::set<Channel> seen;
        std::set<std::string> fields;
        for (const auto& b : frame.bindings) {
            if (!seen.insert(b.channel).second) throw Error("partial spec binds a channel twice in one layer");
            if (!fields.insert(b.field).second) throw Error("partial spec binds a field twice in one layer");
            if (b.field != kCountField && p.dataset.find(b.field) == nullptr) {
                throw Error("partial spec binds unknown field '" + b.field + "'");
            }
        }
        if (static_cast<int>(frame.bindings.size()) > frame.encoding_count) {
            throw Error("partial spec has more bindings than encodings");
        }
    }
    for (const auto& f : p.use_fields) {
        if (p.dataset.find(f) == nullptr) throw Error("partial spec uses unknown field '" + f + "'");
    }
    if (p.facet_field && p.dataset.find(*p.facet_field) == nullptr) {
        throw Error("partial spec facets on unknown field '" + *p.facet_field + "'");
    }
    // fixed fragments must not demand two scale types on one channel (H1)
    std::map<std::string, std::set<std::string>> scale_tokens;
    for (const auto& [tok, n] : p.required) {
        const auto dot = tok.find('.');
        if (dot == std::string::npos) continue;
        const std::string head = tok.substr(0, dot);
        const std::string tail = tok.substr(dot + 1);
        if (head == "mark" || head == "facet" || head == "coordinates") continue;
        if (tail == "linear" || tail == "log" || tail == "ordinal" || tail == "categorical") {
            scale_tokens[head].insert(tail);
        }
    }
    for (const auto& [ch, types] : scale_tokens) {
        if (types.size() > 1) throw Error("partial spec requires several scale types on channel " + ch);
    }
}

Enumeration complete(const PartialSpec& partial, const EnumerationBounds& bounds, const FeatureCatalog& catalog,
                     const WeightTable* weights) {
    return enumerate_constrained(partial, {}, {}, bounds, catalog, weights);
}

Enumeration enumerate_constrained(const PartialSpec& partial, const std::set<std::string>& force,
                                  const std::set<std::string>& forbid, const EnumerationBounds& bounds,
                                  const FeatureCatalog& catalog, const WeightTable* weights) {
    check_partial(partial);
    if (bounds.max_results < 1) throw Error("max_results must be >= 1");
    if (bounds.cost_cap && weights == nullptr) throw Error("a cost cap needs a weight table");
    for (const auto& f : force) {
        if (!catalog.contains(f)) throw UnknownFeature(f);
        if (forbid.count(f)) throw Error("feature '" + f + "' is both forced and forbidden");
    }
    for (const auto& f : forbid) {
        if (!catalog.contains(f)) throw UnknownFeature(f);
    }
    Search search(partial, bounds, catalog, weights, force, forbid);
    return search.run();
}

std::vector<ChartSpec> top_k_distinct_cost(const std::vector<ChartSpec>& specs, const WeightTable& w, std::size_t k,
                                           const FeatureCatalog& catalog) {
    struct Row {
        std::int64_t cost;
        std::string key;
        const ChartSpec* spec;
    };
    std::vector<Row> rows;
    rows.reserve(specs.size());
    for (const auto& s : specs) rows.push_back({cost(extract_features(s, catalog), w), canonical_key(s), &s});
    std::sort(rows.begin(), rows.end(),
              [](const Row& a, const Row& b) { return a.cost < b.cost || (a.cost == b.cost && a.key < b.key); });
    std::vector<ChartSpec> out;
    std::optional<std::int64_t> last;
    for (const auto& r : rows) {
        if (out.size() >= k) break;
        if (last && *last == r.cost) continue;
        last = r.cost;
        out.push_back(*r.spec);
    }
    return out;
}

PartialSpec partial_from_chart(const ChartSpec& spec) {
    PartialSpec p;
    p.dataset = spec.dataset;
    p.coordinates = spec.coordinates;
    std::set<std::string> used;
    for (const auto& m : spec.marks) {
        p.layers.push_back(LayerFrame{static_cast<int>(m.encodings.size()), {}});
        for (const auto& e : m.encodings) {
            if (!e.is_count()) used.insert(e.field);
        }
    }
    if (spec.facet) used.insert(spec.facet->field);
    p.use_fields.assign(used.begin(), used.end());
    return p;
}

json to_json(const PartialSpec& p) {
    json layers = json::array();
    for (const auto& l : p.layers) {
        json bindings = json::array();
        for (const auto& b : l.bindings) bindings.push_back({{"channel", to_string(b.channel)}, {"field", b.field}});
        layers.push_back({{"encodings", l.encoding_count}, {"bindings", std::move(bindings)}});
    }
    json required = json::array();
    for (const auto& t : flatten(p.required)) required.push_back(t);
    static constexpr const char* facet_modes[] = {"optional", "forbidden", "required"};
    json j{{"dataset", to_json(p.dataset)},
           {"layers", std::move(layers)},
           {"fields", p.use_fields},
           {"required", std::move(required)},
           {"facet", facet_modes[static_cast<int>(p.facet)]}};
    if (p.coordinates) j["coordinates"] = to_string(*p.coordinates);
    if (p.facet_field) j["facet_field"] = *p.facet_field;
    return j;
}

PartialSpec partial_from_json(const json& j) {
    PartialSpec p;
    try {
        p.dataset = dataset_from_json(j.at("dataset"));
        if (j.contains("coordinates")) p.coordinates = parse_coordinates(j.at("coordinates").get<std::string>());
        for (const auto& jl : j.at("layers")) {
            LayerFrame l;
            l.encoding_count = jl.value("encodings", 1);
            for (const auto& jb : jl.value("bindings", json::array())) {
                l.bindings.push_back({parse_channel(jb.at("channel").get<std::string>()),
                                      jb.at("field").get<std::string>()});
            }
            p.layers.push_back(std::move(l));
        }
        p.use_fields = j.value("fields", std::vector<std::string>{});
        for (const auto& t : j.value("required", std::vector<std::string>{})) ++p.required[t];
        const std::string mode = j.value("facet", std::string("optional"));
        if (mode == "optional") p.facet = FacetMode::optional;
        else if (mode == "forbidden") p.facet = FacetMode::forbidden;
        else if (mode == "required") p.facet = FacetMode::required;
        else throw ParseError("unknown facet mode '" + mode + "'");
        if (j.contains("facet_field")) p.facet_field = j.at("facet_field").get<std::string>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("partial spec: ") + e.what());
    }
    check_partial(p);
    return p;
}

}  // namespace vizkb
