#include "vizkb/augment.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "vizkb/chart_json.hpp"
#include "vizkb/error.hpp"
#include "vizkb/io.hpp"

namespace vizkb {

using nlohmann::json;

namespace {

const FeatureCatalog& catalog_or_builtin(const FeatureCatalog* c) { return c ? *c : builtin_catalog(); }

DesignDifference diff_of(const TokenBag& l, const TokenBag& r) {
    std::map<std::string, DiffEntry> groups;
    for (const auto& [tok, n] : bag_minus(l, r)) {
        auto& e = groups[token_group(tok)];
        e.left[tok] = n;
    }
    for (const auto& [tok, n] : bag_minus(r, l)) {
        auto& e = groups[token_group(tok)];
        e.right[tok] = n;
    }
    DesignDifference d;
    for (auto& [g, e] : groups) {
        e.group = g;
        d.entries.push_back(std::move(e));
    }
    return d;
}

json bag_json(const TokenBag& b) {
    json arr = json::array();
    for (const auto& t : flatten(b)) arr.push_back(t);
    return arr;
}

}  // namespace

DesignDifference extract_design_differences(const ChartSpec& left, const ChartSpec& right) {
    DesignDifference d = diff_of(abstract_primitives(left), abstract_primitives(right));
    if (d.entries.empty()) throw Error("the two designs have no primitive differences");
    return d;
}

DesignDifference extract_design_differences(const DesignPair& pair) {
    return extract_design_differences(pair.left, pair.right);
}

TokenBag apply_difference(const TokenBag& left, const DesignDifference& diff) {
    TokenBag removed, added;
    for (const auto& e : diff.entries) {
        removed = bag_union(removed, e.left);
        added = bag_union(added, e.right);
    }
    return bag_union(bag_minus(left, removed), added);
}

json to_json(const DesignDifference& d) {
    json arr = json::array();
    for (const auto& e : d.entries) {
        arr.push_back({{"group", e.group}, {"left", bag_json(e.left)}, {"right", bag_json(e.right)}});
    }
    return arr;
}

// ---- primitive augmentation ----

namespace {

PartialSpec side_partial(const ChartSpec& s, TokenBag required) {
    PartialSpec p;
    p.dataset = s.dataset;
    p.coordinates = s.coordinates;
    for (const auto& m : s.marks) {
        LayerFrame frame{static_cast<int>(m.encodings.size()), {}};
        for (const auto& e : m.encodings) frame.bindings.push_back({e.channel, e.field});
        p.layers.push_back(std::move(frame));
    }
    p.required = std::move(required);
    if (s.facet) {
        p.facet = FacetMode::required;
        p.facet_field = s.facet->field;
    } else {
        p.facet = FacetMode::forbidden;
    }
    return p;
}

}  // namespace

std::vector<DesignPair> primitive_augment(const DesignPair& pair, const PrimitiveAugmentOptions& opt) {
    const DesignDifference diff = extract_design_differences(pair);
    TokenBag need_left, need_right;
    for (const auto& e : diff.entries) {
        need_left = bag_union(need_left, e.left);
        need_right = bag_union(need_right, e.right);
    }
    EnumerationBounds bounds;
    bounds.max_results = opt.max_completions;
    const auto lefts = complete(side_partial(pair.left, need_left), bounds).specs;
    const auto rights = complete(side_partial(pair.right, need_right), bounds).specs;

    std::vector<TokenBag> right_tokens;
    right_tokens.reserve(rights.size());
    for (const auto& r : rights) right_tokens.push_back(abstract_primitives(r));
    const std::string orig_left = canonical_key(pair.left);
    const std::string orig_right = canonical_key(pair.right);

    // Match each left completion with the first unused right completion that shows
    // exactly the origin's differences, then keep the pairs closest to the origin.
    struct Match {
        std::size_t distance;
        std::string key;
        std::size_t l, r;
    };
    const TokenBag origin_left = abstract_primitives(pair.left);
    const TokenBag origin_right = abstract_primitives(pair.right);
    auto moved = [](const TokenBag& a, const TokenBag& b) {
        std::size_t n = 0;
        for (const auto& [_, c] : bag_minus(a, b)) n += static_cast<std::size_t>(c);
        for (const auto& [_, c] : bag_minus(b, a)) n += static_cast<std::size_t>(c);
        return n;
    };
    std::vector<Match> matches;
    std::vector<bool> taken(rights.size(), false);
    for (std::size_t i = 0; i < lefts.size(); ++i) {
        const TokenBag lt = abstract_primitives(lefts[i]);
        const std::string lkey = canonical_key(lefts[i]);
        for (std::size_t j = 0; j < rights.size(); ++j) {
            if (taken[j]) continue;
            const std::string rkey = canonical_key(rights[j]);
            if (lkey == orig_left && rkey == orig_right) continue;
            if (diff_of(lt, right_tokens[j]) != diff) continue;
            taken[j] = true;
            matches.push_back({moved(lt, origin_left) + moved(right_tokens[j], origin_right), lkey + "|" + rkey, i, j});
            break;
        }
    }
    std::sort(matches.begin(), matches.end(), [](const Match& a, const Match& b) {
        return a.distance < b.distance || (a.distance == b.distance && a.key < b.key);
    });
    if (matches.size() > opt.max_new) matches.resize(opt.max_new);

    std::vector<DesignPair> out;
    for (const auto& m : matches) {
        DesignPair p;
        p.id = pair.id + "/p" + std::to_string(out.size() + 1);
        p.left = lefts[m.l];
        p.right = rights[m.r];
        p.source = PairSource::primitive_aug;
        p.group = pair.group;
        p.lineage = Lineage{pair.id, {}, {}, {}, std::nullopt};
        out.push_back(std::move(p));
    }
    return out;
}

// ---- coverage ----

double CoverageReport::presence_fraction(const std::string& feature) const {
    if (charts == 0) return 0.0;
    auto it = presence.find(feature);
    return it == presence.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(charts);
}

CoverageReport coverage_report(const std::vector<DesignPair>& corpus, const FeatureCatalog& catalog,
                               std::int64_t threshold) {
    CoverageReport r;
    r.threshold = threshold;
    for (const auto& name : catalog.names()) {
        r.frequencies[name] = 0;
        r.presence[name] = 0;
    }
    for (const auto& p : corpus) {
        for (const ChartSpec* s : {&p.left, &p.right}) {
            ++r.charts;
            for (const auto& [name, n] : extract_features(*s, catalog).counts) {
                if (n <= 0) continue;
                r.frequencies[name] += n;
                r.presence[name] += 1;
            }
        }
    }
    for (const auto& [name, n] : r.frequencies) {
        if (n < threshold) r.under_covered.insert(name);
    }
    return r;
}

std::map<std::string, double> relative_frequencies(const CoverageReport& r) {
    std::map<std::string, double> out;
    for (const auto& [name, n] : r.frequencies) {
        out[name] = r.charts == 0 ? 0.0 : static_cast<double>(n) / static_cast<double>(r.charts);
    }
    return out;
}

json to_json(const CoverageReport& r) {
    json freq = json::object();
    for (const auto& [name, n] : r.frequencies) freq[name] = n;
    return {{"charts", r.charts},
            {"threshold", r.threshold},
            {"frequencies", std::move(freq)},
            {"under_covered", std::vector<std::string>(r.under_covered.begin(), r.under_covered.end())}};
}

// ---- dependencies ----

std::string_view to_string(Relation r) { return r == Relation::provokes ? "provokes" : "contradicts"; }

bool DependencyGraph::has(const std::string& a, Relation r, const std::string& b) const {
    return edges.count({a, r, b}) > 0;
}

bool DependencyGraph::related(const std::string& a, const std::string& b) const {
    for (Relation r : {Relation::provokes, Relation::contradicts}) {
        if (has(a, r, b) || has(b, r, a)) return true;
    }
    return false;
}

DependencyGraph analyze_dependencies(const std::vector<ChartSpec>& probe, const FeatureCatalog& catalog) {
    DependencyGraph g;
    g.nodes = catalog.names();
    const std::size_t n = g.nodes.size();
    std::vector<std::vector<bool>> present(n, std::vector<bool>(probe.size(), false));
    std::vector<bool> seen(n, false);
    for (std::size_t c = 0; c < probe.size(); ++c) {
        const FeatureVector fv = extract_features(probe[c], catalog);
        for (std::size_t f = 0; f < n; ++f) {
            if (fv.has(g.nodes[f])) {
                present[f][c] = true;
                seen[f] = true;
            }
        }
    }
    auto subset = [&](std::size_t a, std::size_t b) {
        for (std::size_t c = 0; c < probe.size(); ++c) {
            if (present[a][c] && !present[b][c]) return false;
        }
        return true;
    };
    auto disjoint = [&](std::size_t a, std::size_t b) {
        for (std::size_t c = 0; c < probe.size(); ++c) {
            if (present[a][c] && present[b][c]) return false;
        }
        return true;
    };
    for (std::size_t a = 0; a < n; ++a) {
        if (!seen[a]) {
            g.undetermined.push_back(g.nodes[a]);
            continue;
        }
        for (std::size_t b = 0; b < n; ++b) {
            if (a == b || !seen[b]) continue;
            if (subset(a, b) && !subset(b, a)) g.edges.insert({g.nodes[a], Relation::provokes, g.nodes[b]});
            if (disjoint(a, b)) g.edges.insert({g.nodes[a], Relation::contradicts, g.nodes[b]});
        }
    }
    return g;
}

json to_json(const DependencyGraph& g) {
    json edges = json::array();
    for (const auto& [a, r, b] : g.edges) edges.push_back({{"a", a}, {"relation", to_string(r)}, {"b", b}});
    return {{"nodes", g.nodes}, {"edges", std::move(edges)}, {"undetermined", g.undetermined}};
}

// ---- feature ablation ----

namespace {

struct Context {
    std::set<std::string> with_force, with_forbid;
    std::set<std::string> without_force, without_forbid;
};

struct Source {
    std::size_t partial = 0;
    std::vector<ChartSpec> with, without;
    std::vector<std::vector<double>> with_fv, without_fv;
    std::set<std::pair<std::size_t, std::size_t>> used;
};

std::vector<double> vector_without(const ChartSpec& s, const FeatureCatalog& catalog, std::size_t skip) {
    auto v = dense(extract_features(s, catalog), catalog);
    v[skip] = 0.0;
    return v;
}

// Next unused couple with the smallest L1 distance; false when none remain.
bool best_couple(Source& src, std::size_t& wi, std::size_t& wo) {
    double best = 0.0;
    bool found = false;
    for (std::size_t i = 0; i < src.with.size(); ++i) {
        for (std::size_t j = 0; j < src.without.size(); ++j) {
            if (src.used.count({i, j})) continue;
            double d = 0.0;
            const auto& a = src.with_fv[i];
            const auto& b = src.without_fv[j];
            for (std::size_t k = 0; k < a.size(); ++k) d += std::abs(a[k] - b[k]);
            if (!found || d < best) {
                best = d;
                wi = i;
                wo = j;
                found = true;
            }
        }
    }
    if (found) src.used.insert({wi, wo});
    return found;
}

struct AblationRun {
    std::vector<std::pair<ChartSpec, ChartSpec>> couples;  // (with, without)
    std::vector<std::size_t> partials;
    std::vector<std::string> notes;
};

AblationRun ablate(const Context& ctx, const std::string& ablated, const std::vector<PartialSpec>& partials,
                   std::size_t wanted, const AblationOptions& opt) {
    const FeatureCatalog& catalog = catalog_or_builtin(opt.catalog);
    const std::size_t skip = catalog.index_of(ablated);
    std::vector<std::size_t> order(partials.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(opt.seed);
    std::shuffle(order.begin(), order.end(), rng);

    AblationRun run;
    std::vector<Source> sources;
    std::size_t next_partial = 0;
    auto take = [&](Source& src) {
        std::size_t wi = 0, wo = 0;
        if (!best_couple(src, wi, wo)) return false;
        run.couples.emplace_back(src.with[wi], src.without[wo]);
        run.partials.push_back(src.partial);
        return true;
    };
    auto open = [&](std::size_t pi) {
        Source src;
        src.partial = pi;
        try {
            src.with = enumerate_constrained(partials[pi], ctx.with_force, ctx.with_forbid, opt.bounds, catalog).specs;
            if (!src.with.empty()) {
                src.without =
                    enumerate_constrained(partials[pi], ctx.without_force, ctx.without_forbid, opt.bounds, catalog)
                        .specs;
            }
        } catch (const BudgetExceeded& e) {
            run.notes.push_back("partial " + std::to_string(pi) + ": " + e.what());
            return false;
        }
        if (src.with.empty() || src.without.empty()) return false;
        for (const auto& c : src.with) src.with_fv.push_back(vector_without(c, catalog, skip));
        for (const auto& c : src.without) src.without_fv.push_back(vector_without(c, catalog, skip));
        sources.push_back(std::move(src));
        return true;
    };
    // Round robin: one couple per feasible partial per round; partials are opened
    // lazily in shuffled order while more pairs are needed.
    while (run.couples.size() < wanted) {
        bool progress = false;
        for (std::size_t s = 0; s < sources.size() && run.couples.size() < wanted; ++s) {
            progress = take(sources[s]) || progress;
        }
        while (run.couples.size() < wanted && next_partial < order.size()) {
            if (open(order[next_partial++])) progress = take(sources.back()) || progress;
        }
        if (!progress) break;
    }
    return run;
}

DesignPair ablation_pair(const std::pair<ChartSpec, ChartSpec>& couple, std::size_t index, PairSource source,
                         std::string id, std::vector<std::string> ablated, std::string context, std::uint64_t seed) {
    DesignPair p;
    p.id = std::move(id);
    const bool with_left = index % 2 == 0;
    p.left = with_left ? couple.first : couple.second;
    p.right = with_left ? couple.second : couple.first;
    p.source = source;
    p.lineage = Lineage{{}, std::move(ablated), std::move(context), with_left ? "left" : "right", seed};
    return p;
}

}  // namespace

AugmentResult feature_augment_unary(const std::string& feature, const std::vector<PartialSpec>& partials,
                                    std::size_t pairs_per_feature, const AblationOptions& opt) {
    const FeatureCatalog& catalog = catalog_or_builtin(opt.catalog);
    if (!catalog.contains(feature)) throw UnknownFeature(feature);
    AugmentResult out;
    Context ctx;
    ctx.with_force = {feature};
    ctx.without_forbid = {feature};
    const AblationRun run = ablate(ctx, feature, partials, pairs_per_feature, opt);
    for (const auto& n : run.notes) out.warnings.push_back({feature, n});
    for (std::size_t i = 0; i < run.couples.size(); ++i) {
        out.pairs.push_back(ablation_pair(run.couples[i], i, PairSource::feature_aug_unary,
                                          "unary/" + feature + "/" + std::to_string(i + 1), {feature},
                                          "partial " + std::to_string(run.partials[i]), opt.seed));
    }
    if (out.pairs.empty()) {
        out.warnings.push_back({feature, "unsatisfiable: no partial completes both with and without the feature"});
    } else if (out.pairs.size() < pairs_per_feature) {
        out.warnings.push_back({feature, "only " + std::to_string(out.pairs.size()) + " of " +
                                             std::to_string(pairs_per_feature) + " pairs"});
    }
    return out;
}

std::string_view to_string(BinaryRejection r) {
    switch (r) {
        case BinaryRejection::none: return "none";
        case BinaryRejection::unknown_feature: return "unknown_feature";
        case BinaryRejection::same_feature: return "same_feature";
        case BinaryRejection::contradictory: return "contradictory";
        case BinaryRejection::provoking: return "provoking";
        case BinaryRejection::too_common: return "too_common";
    }
    return "none";
}

BinaryAugmentResult feature_augment_binary(const std::string& a, const std::string& b,
                                           const std::vector<PartialSpec>& partials, const DependencyGraph& graph,
                                           const CoverageReport* coverage, std::size_t pairs_per_context,
                                           const AblationOptions& opt, double max_presence) {
    const FeatureCatalog& catalog = catalog_or_builtin(opt.catalog);
    BinaryAugmentResult out;
    const std::string subject = a + "," + b;
    auto reject = [&](BinaryRejection r) {
        out.rejection = r;
        out.warnings.push_back({subject, "rejected: " + std::string(to_string(r))});
        return out;
    };
    if (!catalog.contains(a) || !catalog.contains(b)) return reject(BinaryRejection::unknown_feature);
    if (a == b) return reject(BinaryRejection::same_feature);
    if (graph.has(a, Relation::contradicts, b) || graph.has(b, Relation::contradicts, a)) {
        return reject(BinaryRejection::contradictory);
    }
    if (graph.has(a, Relation::provokes, b) || graph.has(b, Relation::provokes, a)) {
        return reject(BinaryRejection::provoking);
    }
    if (coverage && (coverage->presence_fraction(a) > max_presence || coverage->presence_fraction(b) > max_presence)) {
        return reject(BinaryRejection::too_common);
    }

    Context with_a{{a, b}, {}, {a}, {b}};
    Context without_a{{b}, {a}, {}, {a, b}};
    std::size_t index = 0;
    for (const auto& [ctx, label] : {std::pair{with_a, "with:" + a}, std::pair{without_a, "without:" + a}}) {
        const AblationRun run = ablate(ctx, b, partials, pairs_per_context, opt);
        for (const auto& n : run.notes) out.warnings.push_back({subject, n});
        if (run.couples.empty()) out.warnings.push_back({subject, "no pairs in context " + label});
        for (std::size_t i = 0; i < run.couples.size(); ++i, ++index) {
            out.pairs.push_back(ablation_pair(run.couples[i], index, PairSource::feature_aug_binary,
                                              "binary/" + a + "/" + b + "/" + std::to_string(index + 1), {b},
                                              label, opt.seed));
        }
    }
    return out;
}

// ---- seed augmentation ----

PartialSpec seed_partial(const SeedDataSpec& seed) {
    PartialSpec p;
    p.dataset.name = seed.name;
    p.dataset.fields = seed.fields;
    p.dataset.rows = seed.rows;
    if (p.dataset.rows <= 0) {
        p.dataset.rows = 1;
        for (const auto& f : seed.fields) p.dataset.rows = std::max(p.dataset.rows, f.cardinality);
    }
    p.layers.assign(static_cast<std::size_t>(std::max(seed.layer_count, 0)), LayerFrame{seed.encoding_count, {}});
    for (const auto& f : seed.fields) p.use_fields.push_back(f.name);
    return p;
}

json to_json(const SeedDataSpec& s) {
    json fields = json::array();
    for (const auto& f : s.fields) fields.push_back(to_json(f));
    json j{{"name", s.name}, {"fields", std::move(fields)}, {"layers", s.layer_count}, {"encodings", s.encoding_count}};
    if (s.rows > 0) j["rows"] = s.rows;
    return j;
}

SeedDataSpec seed_from_json(const json& j) {
    SeedDataSpec s;
    try {
        s.name = j.at("name").get<std::string>();
        for (const auto& f : j.at("fields")) s.fields.push_back(field_from_json(f));
        s.rows = j.value("rows", std::int64_t{0});
        s.layer_count = j.value("layers", 1);
        s.encoding_count = j.value("encodings", 2);
    } catch (const json::exception& e) {
        throw ParseError(std::string("seed spec: ") + e.what());
    }
    check_partial(seed_partial(s));
    return s;
}

std::vector<SeedDataSpec> read_seeds(const std::string& path) {
    const json j = read_json(path);
    const json& arr = j.is_object() ? j.at("seeds") : j;
    std::vector<SeedDataSpec> out;
    for (const auto& s : arr) out.push_back(seed_from_json(s));
    return out;
}

AugmentResult seed_augment(const std::vector<SeedDataSpec>& seeds, const WeightTable& w, const SeedOptions& opt) {
    if (opt.n_top < 2) throw Error("seed augmentation needs n_top >= 2");
    const FeatureCatalog& catalog = catalog_or_builtin(opt.catalog);
    AugmentResult out;
    for (const auto& seed : seeds) {
        const auto specs = complete(seed_partial(seed), opt.bounds, catalog, &w).specs;
        const auto top = specs.empty() ? std::vector<ChartSpec>{} : top_k_distinct_cost(specs, w, opt.n_top, catalog);
        if (top.size() < 2) {
            out.warnings.push_back({seed.name, "fewer than 2 distinct costs; no pairs"});
            continue;
        }
        if (top.size() < opt.n_top) {
            out.warnings.push_back({seed.name, "only " + std::to_string(top.size()) + " distinct costs"});
        }
        std::size_t k = 0;
        for (std::size_t i = 0; i < top.size(); ++i) {
            for (std::size_t j = i + 1; j < top.size(); ++j, ++k) {
                DesignPair p;
                p.id = "seed/" + seed.name + "/" + std::to_string(k + 1);
                // top is in increasing cost order, so top[i] is the cheaper design
                const bool cheap_left = k % 2 == 0;
                p.left = cheap_left ? top[i] : top[j];
                p.right = cheap_left ? top[j] : top[i];
                p.label = cheap_left ? -1 : 1;
                p.source = PairSource::seed_aug;
                p.provenance = LabelProvenance::seed_weights;
                p.group = seed.name;
                out.pairs.push_back(std::move(p));
            }
        }
    }
    return out;
}

// ---- legibility ----

Legibility flag_illegible(const ChartSpec& spec, std::int64_t density_cap) {
    const ChartFacts facts = analyze(spec);
    Legibility out;
    for (const auto& layer : facts.layers) {
        const bool barlike = layer.mark == MarkType::bar || layer.mark == MarkType::area;
        std::int64_t estimate = 1;
        if (layer.aggregated) {
            // one mark per group
            for (const auto& e : layer.encodings) {
                if (e.aggregated) continue;
                estimate *= e.discrete ? e.cardinality : (e.field ? e.field->cardinality : 1);
            }
        } else {
            if (barlike) {
                for (const auto& e : layer.encodings) {
                    if (e.discrete && e.cardinality > kHighCardinality &&
                        (e.enc->channel == Channel::x || e.enc->channel == Channel::y)) {
                        out.illegible = true;
                        out.reason = "overlapping bars without aggregation";
                        out.estimated_marks = std::max(out.estimated_marks, spec.dataset.rows);
                        return out;
                    }
                }
            }
            const bool continuous_pos = (layer.x && layer.x->continuous) || (layer.y && layer.y->continuous);
            if (continuous_pos && (barlike || layer.mark == MarkType::line)) {
                estimate = spec.dataset.rows;
            } else {
                for (const auto& e : layer.encodings) {
                    if (e.discrete) estimate *= e.cardinality;
                }
            }
        }
        out.estimated_marks = std::max(out.estimated_marks, estimate);
        if (estimate > density_cap && !out.illegible) {
            out.illegible = true;
            if (layer.mark == MarkType::line) out.reason = "overplotted lines";
            else if (barlike && !layer.aggregated) out.reason = "overlapping bars without aggregation";
            else out.reason = "excessive mark density";
        }
    }
    return out;
}

void flag_pair(DesignPair& pair, std::int64_t density_cap) {
    for (const ChartSpec* s : {&pair.left, &pair.right}) {
        const Legibility l = flag_illegible(*s, density_cap);
        if (l.illegible) {
            pair.illegible_hint = (s == &pair.left ? "left: " : "right: ") + l.reason;
            return;
        }
    }
}

}  // namespace vizkb
