// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 when any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "support.hpp"
#include "synth.hpp"
#include "vizkb/augment.hpp"
#include "vizkb/evaluate.hpp"
#include "vizkb/training.hpp"

using namespace vizkb;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

const std::vector<SeedDataSpec>& seeds() {
    static const auto s = read_seeds(std::string(VIZKB_TEST_DATA) + "/seeds.json");
    return s;
}

// Cost as a dense dot product in catalog order, independent of cost().
double dense_cost(const ChartSpec& s, const WeightTable& w) {
    const auto& cat = builtin_catalog();
    const auto d = dense(extract_features(s, cat), cat);
    double c = 0;
    for (std::size_t i = 0; i < d.size(); ++i) c += d[i] * static_cast<double>(w.weights.at(cat.features()[i].name));
    return c;
}

Outcome seed_counting() {
    const auto t0 = Clock::now();
    const auto r = seed_augment(seeds(), default_weights(builtin_catalog()));
    const double t = seconds_since(t0);
    const bool ok = seeds().size() == 10 && r.pairs.size() == 280 && t < 60.0;
    return {ok, fmt("%zu seeds -> %zu pairs in %.2f s (want 280, < 60 s)", seeds().size(), r.pairs.size(), t)};
}

Outcome seed_self_compliance() {
    const auto w = default_weights(builtin_catalog());
    const auto pairs = seed_augment(seeds(), w).pairs;
    std::size_t verified = 0;
    for (const auto& p : pairs) {
        const double cl = dense_cost(p.left, w), cr = dense_cost(p.right, w);
        if (p.label && ((*p.label == -1 && cl < cr) || (*p.label == 1 && cr < cl))) ++verified;
    }
    std::size_t compliant = 0;
    for (const auto& r : compliance_all(pairs, w)) compliant += r.compliant ? 1 : 0;
    const bool ok = !pairs.empty() && verified == pairs.size() && compliant == pairs.size();
    return {ok, fmt("%zu/%zu compliant, %zu/%zu re-verified by dense dot product", compliant, pairs.size(), verified,
                    pairs.size())};
}

// Fixed configuration: pool of 150 charts per partial, hidden weights from seed 0,
// pairs from seed 1, split seed 0, default trainer settings.
Outcome planted_recovery() {
    const auto& pool = test::chart_pool();
    const auto t0 = Clock::now();
    const auto hidden = test::planted_weights(0);
    const auto pairs = test::planted_pairs(pool, hidden, 500, 1);
    const auto plan = make_splits(pairs, 0.15, 5, 0);
    const std::set<std::string> holdout(plan.holdout.begin(), plan.holdout.end());
    std::vector<DesignPair> fit, held;
    for (const auto& p : pairs) (holdout.count(p.id) ? held : fit).push_back(p);
    const auto m = train_logistic(to_examples(fit), builtin_catalog().names());
    const auto w = coefficients_to_weights(m);
    const double acc = overall_accuracy(accuracy(held, w));
    const double t = seconds_since(t0);
    const double train_acc = overall_accuracy(accuracy(fit, w));
    const bool ok = acc >= 0.95 && t < 30.0;
    return {ok, fmt("holdout %.4f on %zu pairs (want >= 0.95), train %.4f, %zu epochs, %.2f s (want < 30 s)", acc,
                    held.size(), train_acc, m.epochs, t)};
}

Outcome coefficient_conversion() {
    ModelCoefficients m;
    m.features = {"a", "b"};
    m.coef = {1.223, -0.712};
    const auto w = coefficients_to_weights(m);
    bool ok = w.weights.at("a") == 1223 && w.weights.at("b") == -712;
    std::size_t clamp_checked = 0, clamp_ok = 0;
    for (int i = 1; i < 500; ++i) {
        for (double sign : {1.0, -1.0}) {
            ModelCoefficients s;
            s.features = {"f"};
            s.coef = {sign * i * 1e-6};
            const auto v = coefficients_to_weights(s).weights.at("f");
            ++clamp_checked;
            clamp_ok += v == static_cast<std::int64_t>(sign) ? 1 : 0;
        }
    }
    ModelCoefficients z;
    z.features = {"f"};
    z.coef = {0.0};
    ok = ok && clamp_ok == clamp_checked && coefficients_to_weights(z).weights.at("f") == 0;
    return {ok, fmt("1.223 -> %lld, -0.712 -> %lld; sign clamp %zu/%zu for |c| < 0.0005",
                    static_cast<long long>(w.weights.at("a")), static_cast<long long>(w.weights.at("b")), clamp_ok,
                    clamp_checked)};
}

Outcome primitive_round_trip() {
    const auto& pool = test::chart_pool(60);
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    std::vector<DesignPair> corpus;
    while (corpus.size() < 50) {
        DesignPair p;
        p.id = "o" + std::to_string(corpus.size());
        p.left = pool[pick(rng)];
        p.right = pool[pick(rng)];
        if (abstract_primitives(p.left) == abstract_primitives(p.right)) continue;
        corpus.push_back(std::move(p));
    }
    std::size_t emitted = 0, exact = 0, max_out = 0, productive = 0;
    for (const auto& origin : corpus) {
        const auto want = extract_design_differences(origin);
        const auto out = primitive_augment(origin);
        max_out = std::max(max_out, out.size());
        productive += out.empty() ? 0 : 1;
        for (const auto& q : out) {
            ++emitted;
            exact += extract_design_differences(q) == want ? 1 : 0;
        }
    }
    const bool ok = emitted > 0 && exact == emitted && max_out <= 7;
    return {ok, fmt("%zu/%zu emitted pairs reproduce the origin differences; %zu/50 origins productive; max %zu "
                    "per origin (want <= 7)",
                    exact, emitted, productive, max_out)};
}

Outcome unary_exactness() {
    std::vector<PartialSpec> partials;
    for (const auto& s : seeds()) partials.push_back(seed_partial(s));
    AblationOptions opt;
    opt.seed = 1;
    std::size_t features = 0, full = 0, partial = 0, infeasible = 0, emitted = 0, exact = 0, unreported = 0;
    for (const auto& f : builtin_catalog().names()) {
        ++features;
        const auto r = feature_augment_unary(f, partials, 7, opt);
        for (const auto& p : r.pairs) {
            ++emitted;
            const auto a = extract_features(p.left, builtin_catalog()).get(f);
            const auto b = extract_features(p.right, builtin_catalog()).get(f);
            const bool with_left = p.lineage && p.lineage->with_side == "left";
            exact += ((with_left && a >= 1 && b == 0) || (!with_left && b >= 1 && a == 0)) ? 1 : 0;
        }
        if (r.pairs.size() == 7) ++full;
        else if (r.pairs.empty()) ++infeasible;
        else ++partial;
        if (r.pairs.size() > 7 || (r.pairs.size() < 7 && r.warnings.empty())) ++unreported;
    }
    const bool ok = emitted > 0 && exact == emitted && unreported == 0;
    return {ok, fmt("%zu/%zu pairs exact (>=1, 0); %zu features: %zu with 7 pairs, %zu short and warned, %zu "
                    "infeasible and warned, %zu unreported",
                    exact, emitted, features, full, partial, infeasible, unreported)};
}

Outcome dependency_oracle() {
    const auto micro = builtin_catalog().subset(
        {"aggregate", "aggregate_mean", "log_x", "linear_x", "bin", "bin_high", "value_bar", "encoding_color"});
    std::vector<ChartSpec> probe;
    EnumerationBounds b;
    b.max_results = 1'000'000;
    for (int n : {1, 2}) {
        PartialSpec p;
        p.dataset.name = "micro";
        p.dataset.rows = 60;
        p.dataset.fields = {test::num("Q", 40, 1, 9), test::str("N", 4)};
        p.layers = {LayerFrame{n, {}}};
        const auto e = complete(p, b);
        probe.insert(probe.end(), e.specs.begin(), e.specs.end());
    }
    const auto g = analyze_dependencies(probe, micro);
    const auto want = test::cooccurrence_oracle(probe, micro);
    const bool named = g.has("aggregate_mean", Relation::provokes, "aggregate") &&
                       g.has("log_x", Relation::contradicts, "linear_x");
    const bool ok = g.edges == want && named;
    return {ok, fmt("%zu probe charts, %zu edges vs %zu oracle edges, equal: %s; named relations present: %s",
                    probe.size(), g.edges.size(), want.size(), g.edges == want ? "yes" : "no", named ? "yes" : "no")};
}

std::set<std::string> keys(const std::vector<ChartSpec>& specs) {
    std::set<std::string> out;
    for (const auto& s : specs) out.insert(canonical_key(s));
    return out;
}

Outcome enumerator_oracle() {
    EnumerationBounds unbounded;
    unbounded.max_results = 10'000'000;
    const std::vector<PartialSpec> partials = {
        test::micro_partial(1, {}),         test::micro_partial(1, {"Q"}),       test::micro_partial(2, {}),
        test::micro_partial(2, {"Q", "N"}), test::micro_partial(2, {"N"}, true), test::micro_partial(1, {"Q"}, true),
    };
    std::size_t equal = 0, designs = 0;
    for (const auto& p : partials) {
        const auto e = complete(p, unbounded);
        designs += e.specs.size();
        equal += keys(e.specs) == test::brute_force(p) && keys(e.specs).size() == e.specs.size() ? 1 : 0;
    }
    const auto base = test::micro_partial(2, {"Q"});
    const auto all = complete(base, unbounded).specs;
    const std::vector<std::pair<std::set<std::string>, std::set<std::string>>> cases = {
        {{"log_x"}, {"linear_x"}}, {{"bin_high"}, {}}, {{}, {"value_point", "value_bar"}},
        {{"aggregate_mean"}, {"categorical_color"}}, {{"facet_row", "encoding_color"}, {"log_color"}},
    };
    std::size_t filtered_equal = 0;
    for (const auto& [force, forbid] : cases) {
        std::set<std::string> want;
        for (const auto& s : all) {
            const auto fv = extract_features(s, builtin_catalog());
            bool keep = true;
            for (const auto& f : force) keep = keep && fv.get(f) >= 1;
            for (const auto& f : forbid) keep = keep && fv.get(f) == 0;
            if (keep) want.insert(canonical_key(s));
        }
        filtered_equal += keys(enumerate_constrained(base, force, forbid, unbounded).specs) == want ? 1 : 0;
    }
    const bool ok = equal == partials.size() && filtered_equal == cases.size();
    return {ok, fmt("complete = brute force on %zu/%zu partials (%zu designs); constrained = post-filter on %zu/%zu",
                    equal, partials.size(), designs, filtered_equal, cases.size())};
}

Outcome trainer_numerics() {
    const auto pool = test::chart_pool(30);
    auto pairs = test::planted_pairs(pool, test::planted_weights(1), 40, 2);
    pairs[0].label = 0;
    pairs[1].label = 0;
    const auto ex = to_examples(pairs);
    const std::size_t dim = builtin_catalog().size();
    std::mt19937_64 rng(99);
    std::normal_distribution<double> g(0.0, 0.5);
    const double h = 1e-5;
    double worst_fd = 0.0;
    auto rel = [](double a, double n) { return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-4}); };

    // label-0 quadruples: gradient of the loss summed over each quadruple
    std::vector<DesignPair> ties;
    for (std::size_t i = 0; i < 20; ++i) {
        auto p = pairs[i + 2];
        p.label = 0;
        ties.push_back(p);
    }
    const auto quads = to_examples(ties);
    double worst_neutral = 0.0, worst_label_part = 0.0;

    for (int point = 0; point < 100; ++point) {
        std::vector<double> w(dim);
        for (auto& v : w) v = g(rng);
        const double b = g(rng);
        const double l2 = point % 2 ? 1e-3 : 0.0;
        std::vector<double> gw;
        double gb = 0;
        logistic_objective(ex, w, b, l2, &gw, &gb);
        for (std::size_t i = 0; i < dim; ++i) {
            auto wp = w, wm = w;
            wp[i] += h;
            wm[i] -= h;
            const double num = (logistic_objective(ex, wp, b, l2) - logistic_objective(ex, wm, b, l2)) / (2 * h);
            worst_fd = std::max(worst_fd, rel(gw[i], num));
        }
        const double numb = (logistic_objective(ex, w, b + h, l2) - logistic_objective(ex, w, b - h, l2)) / (2 * h);
        worst_fd = std::max(worst_fd, rel(gb, numb));

        // unregularized gradient of the quadruples alone, and its label-dependent part
        std::vector<double> gq;
        double gqb = 0;
        logistic_objective(quads, w, b, 0.0, &gq, &gqb);
        for (double v : gq) worst_neutral = std::max(worst_neutral, std::abs(v));
        for (std::size_t q = 0; q + 3 < quads.size(); q += 4) {
            double s = 0;
            for (std::size_t j = 0; j < 4; ++j) s += quads[q + j].y;
            worst_label_part = std::max(worst_label_part, std::abs(s));
        }
    }
    const bool fd_ok = worst_fd < 1e-5;
    const bool neutral_ok = worst_neutral <= 1e-12;
    return {fd_ok && neutral_ok,
            fmt("finite differences: max rel error %.2e (want < 1e-5, %s); label-0 quadruple gradient: max |g| %.3e "
                "(want <= 1e-12, %s); label terms cancel: max |sum y| %.0f",
                worst_fd, fd_ok ? "ok" : "not met", worst_neutral, neutral_ok ? "ok" : "not met", worst_label_part)};
}

Outcome compliance_rules() {
    struct Row {
        std::int64_t l, r;
        int label;
        bool want;
    };
    const std::vector<Row> table = {{5, 9, -1, true}, {9, 5, -1, false}, {9, 5, 1, true},   {5, 9, 1, false},
                                    {7, 7, -1, false}, {7, 7, 1, false}, {10, 12, 0, true}, {12, 10, 0, true},
                                    {10, 13, 0, false}, {13, 10, 0, false}, {4, 4, 0, true}};
    std::size_t right = 0;
    for (const auto& row : table) right += judge(row.l, row.r, row.label) == row.want ? 1 : 0;

    const auto w = default_weights(builtin_catalog());
    auto mk = [](const std::string& id, const std::string& l, const std::string& r, int label) {
        DesignPair p;
        p.id = id;
        p.left = test::chart(l);
        p.right = test::chart(r);
        p.label = label;
        p.provenance = LabelProvenance::manual;
        return p;
    };
    const std::string a = "point x:Q1:linear y:Q2:linear", b = "bar x:N:categorical y:Q1/mean:linear";
    const int good = dense_cost(test::chart(a), w) < dense_cost(test::chart(b), w) ? -1 : 1;
    const auto agree = compliance_all({mk("d1", a, b, good), mk("d2", b, a, -good)}, w);
    const auto clash = compliance_all({mk("d1", a, b, good), mk("d2", b, a, good)}, w);
    const bool dup_ok = agree.size() == 2 && agree[0].compliant && agree[1].compliant && clash.size() == 2 &&
                        !clash[0].compliant && !clash[1].compliant &&
                        clash[0].rule == ComplianceRule::duplicate_inconsistent &&
                        clash[1].rule == ComplianceRule::duplicate_inconsistent;
    return {right == table.size() && dup_ok,
            fmt("%zu/%zu table rows exact; swapped duplicates: agreeing pass, conflicting both fail: %s", right,
                table.size(), dup_ok ? "yes" : "no")};
}

Outcome split_integrity() {
    const auto& pool = test::chart_pool(30);
    auto pairs = test::planted_pairs(pool, test::planted_weights(5), 786, 6);
    for (std::size_t i = 0; i < pairs.size(); i += 9) pairs[i].label = 0;
    const auto plan = make_splits(pairs, 0.15, 5, 7);
    std::size_t lo = SIZE_MAX, hi = 0;
    for (const auto& f : plan.folds) {
        lo = std::min(lo, f.size());
        hi = std::max(hi, f.size());
    }
    // every example derived from a pair must land in the pair's cell
    std::map<std::string, const DesignPair*> by_id;
    for (const auto& p : pairs) by_id[p.id] = &p;
    std::map<std::string, std::set<int>> cells_of;
    std::size_t examples = 0;
    auto place = [&](const std::vector<std::string>& ids, int cell) {
        std::vector<DesignPair> members;
        for (const auto& id : ids) members.push_back(*by_id.at(id));
        for (const auto& e : to_examples(members)) {
            cells_of[e.pair_id].insert(cell);
            ++examples;
        }
    };
    place(plan.holdout, -1);
    for (std::size_t f = 0; f < plan.folds.size(); ++f) place(plan.folds[f], static_cast<int>(f));
    std::size_t split_apart = 0;
    for (const auto& [id, cells] : cells_of) split_apart += cells.size() == 1 && cells.count(plan.cell_of(id)) ? 0 : 1;
    const bool ok = plan.holdout.size() == 118 && hi - lo <= 1 && cells_of.size() == 786 && split_apart == 0;
    return {ok, fmt("holdout %zu (want 118); fold sizes %zu..%zu; %zu examples from %zu pairs, %zu split apart",
                    plan.holdout.size(), lo, hi, examples, cells_of.size(), split_apart)};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"seed counting", seed_counting},
        {"seed self-compliance", seed_self_compliance},
        {"planted-model recovery", planted_recovery},
        {"coefficient conversion", coefficient_conversion},
        {"primitive-augmentation round trip", primitive_round_trip},
        {"unary ablation exactness", unary_exactness},
        {"dependency oracle", dependency_oracle},
        {"enumerator oracle", enumerator_oracle},
        {"trainer numerics", trainer_numerics},
        {"compliance rules", compliance_rules},
        {"split integrity", split_integrity},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    std::printf("%d of %zu criteria pass\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
