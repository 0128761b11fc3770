#include <doctest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "synth.hpp"
#include "vizkb/error.hpp"
#include "vizkb/evaluate.hpp"
#include "vizkb/training.hpp"

using namespace vizkb;
using test::chart;

namespace {

DesignPair labeled(const std::string& id, const std::string& l, const std::string& r, int label) {
    DesignPair p;
    p.id = id;
    p.left = chart(l);
    p.right = chart(r);
    p.label = label;
    p.provenance = LabelProvenance::manual;
    return p;
}

std::vector<DesignPair> id_pairs(std::size_t n, std::size_t groups = 1) {
    std::vector<DesignPair> out;
    for (std::size_t i = 0; i < n; ++i) {
        DesignPair p;
        p.id = "p" + std::to_string(i);
        p.group = "g" + std::to_string(i % groups);
        out.push_back(p);
    }
    return out;
}

// Points on both sides of a random hyperplane through the origin, with a margin.
std::vector<TrainExample> separable(std::size_t n, std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> w(dim);
    for (auto& v : w) v = g(rng);
    std::vector<TrainExample> out;
    while (out.size() < n) {
        std::vector<double> x(dim);
        for (auto& v : x) v = g(rng);
        double s = 0;
        for (std::size_t i = 0; i < dim; ++i) s += w[i] * x[i];
        if (std::abs(s) < 0.3) continue;
        out.push_back({x, s > 0 ? 1 : -1, "e" + std::to_string(out.size()), false});
    }
    return out;
}

std::vector<std::string> names(std::size_t dim) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < dim; ++i) out.push_back("f" + std::to_string(i));
    return out;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

TEST_CASE("pair_to_examples") {
    const auto p = labeled("a", "point x:Q1:linear y:Q2:log", "bar x:N:categorical y:Q1/mean:linear", -1);
    const auto ex = pair_to_examples(p);
    REQUIRE(ex.size() == 2);
    CHECK(ex[0].y == -1);
    CHECK(!ex[0].rotated);
    CHECK(ex[1].y == 1);
    CHECK(ex[1].rotated);
    const auto l = dense(extract_features(p.left, builtin_catalog()), builtin_catalog());
    const auto r = dense(extract_features(p.right, builtin_catalog()), builtin_catalog());
    for (std::size_t i = 0; i < l.size(); ++i) {
        CHECK(ex[0].x[i] == l[i] - r[i]);
        CHECK(ex[1].x[i] == -(l[i] - r[i]));
    }
    CHECK(ex[0].pair_id == "a");
    CHECK(ex[1].pair_id == "a");

    auto z = p;
    z.label = 0;
    const auto q = pair_to_examples(z);
    REQUIRE(q.size() == 4);
    CHECK(q[0].y + q[1].y + q[2].y + q[3].y == 0);

    auto same = labeled("s", "point x:Q1:linear", "point x:Q1:linear", 1);
    for (const auto& e : pair_to_examples(same)) {
        for (double v : e.x) CHECK(v == 0.0);
    }
    auto un = p;
    un.label.reset();
    CHECK_THROWS_AS(pair_to_examples(un), Error);

    auto ill = p;
    ill.illegible = true;
    CHECK(to_examples({p, ill, z}).size() == 6);
}

TEST_CASE("make_splits: counts") {
    const auto big = make_splits(id_pairs(786, 4), 0.15, 5, 1);
    CHECK(big.holdout.size() == 118);
    std::size_t lo = 1000, hi = 0, total = big.holdout.size();
    for (const auto& f : big.folds) {
        lo = std::min(lo, f.size());
        hi = std::max(hi, f.size());
        total += f.size();
    }
    CHECK(hi - lo <= 1);
    CHECK(total == 786);

    const auto small = make_splits(id_pairs(20), 0.15, 5, 3);
    CHECK(small.holdout.size() == 3);
    std::vector<std::size_t> sizes;
    for (const auto& f : small.folds) sizes.push_back(f.size());
    CHECK(sizes == std::vector<std::size_t>{4, 4, 3, 3, 3});
}

TEST_CASE("make_splits: integrity, determinism, strata, errors") {
    const auto pairs = id_pairs(200, 4);
    const auto a = make_splits(pairs, 0.15, 5, 42);
    const auto b = make_splits(pairs, 0.15, 5, 42);
    CHECK(a.holdout == b.holdout);
    CHECK(a.folds == b.folds);
    const auto c = make_splits(pairs, 0.15, 5, 43);
    CHECK(c.holdout != a.holdout);

    std::map<std::string, int> seen;
    for (const auto& id : a.holdout) ++seen[id];
    for (const auto& f : a.folds) {
        for (const auto& id : f) ++seen[id];
    }
    CHECK(seen.size() == 200);
    for (const auto& [id, n] : seen) CHECK(n == 1);

    // each of the four equal groups gets an equal share of the 30 holdout pairs
    std::map<std::string, int> per_group;
    for (const auto& id : a.holdout) per_group["g" + std::to_string(std::stoi(id.substr(1)) % 4)]++;
    for (const auto& [g, n] : per_group) CHECK((n == 7 || n == 8));

    CHECK(split_plan_from_json(to_json(a)).folds == a.folds);
    CHECK(a.cell_of(a.holdout[0]) == -1);
    CHECK(a.cell_of(a.folds[2][0]) == 2);
    CHECK_THROWS_AS(a.cell_of("nope"), Error);

    CHECK_THROWS_AS(make_splits(id_pairs(5), 0.15, 5, 0), Error);
    auto dup = id_pairs(20);
    dup[3].id = "p0";
    CHECK_THROWS_AS(make_splits(dup, 0.15, 5, 0), Error);
}

TEST_CASE("logistic gradient matches central finite differences") {
    const auto pool = test::chart_pool(30);
    auto pairs = test::planted_pairs(pool, test::planted_weights(1), 40, 2);
    pairs[0].label = 0;
    pairs[1].label = 0;
    const auto ex = to_examples(pairs);
    const std::size_t dim = builtin_catalog().size();
    std::mt19937_64 rng(99);
    std::normal_distribution<double> g(0.0, 0.5);
    const double h = 1e-5;
    double worst = 0.0;
    for (int point = 0; point < 100; ++point) {
        std::vector<double> w(dim);
        for (auto& v : w) v = g(rng);
        const double b = g(rng);
        const double l2 = point % 2 ? 1e-3 : 0.0;
        std::vector<double> gw;
        double gb = 0;
        logistic_objective(ex, w, b, l2, &gw, &gb);
        auto rel = [](double a, double n) { return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-4}); };
        for (std::size_t i = 0; i < dim; i += 3) {
            auto wp = w, wm = w;
            wp[i] += h;
            wm[i] -= h;
            const double num = (logistic_objective(ex, wp, b, l2) - logistic_objective(ex, wm, b, l2)) / (2 * h);
            worst = std::max(worst, rel(gw[i], num));
        }
        const double numb = (logistic_objective(ex, w, b + h, l2) - logistic_objective(ex, w, b - h, l2)) / (2 * h);
        worst = std::max(worst, rel(gb, numb));
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("hinge subgradient matches finite differences away from kinks") {
    const auto ex = separable(60, 4, 5);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(0.0, 1.0);
    const double h = 1e-6;
    for (int point = 0; point < 50; ++point) {
        std::vector<double> w(4);
        for (auto& v : w) v = g(rng);
        const double b = g(rng);
        bool near_kink = false;
        for (const auto& e : ex) {
            double z = b;
            for (std::size_t i = 0; i < 4; ++i) z += w[i] * e.x[i];
            near_kink = near_kink || std::abs(1.0 - e.y * z) < 1e-3;
        }
        if (near_kink) continue;
        std::vector<double> gw;
        double gb = 0;
        hinge_objective(ex, w, b, 1e-3, &gw, &gb);
        for (std::size_t i = 0; i < 4; ++i) {
            auto wp = w, wm = w;
            wp[i] += h;
            wm[i] -= h;
            const double num = (hinge_objective(ex, wp, b, 1e-3) - hinge_objective(ex, wm, b, 1e-3)) / (2 * h);
            CHECK(gw[i] == doctest::Approx(num).epsilon(1e-6));
        }
    }
}

// A label-0 quadruple is symmetric under label swap, so the label-dependent part of
// its gradient cancels. The remaining label-independent part is
// [tanh(z/2) - tanh(z'/2)] x with z = w.x + b, z' = -w.x + b, which vanishes only at
// w.x = 0.
TEST_CASE("label-0 quadruples: what cancels and what does not") {
    const auto p = labeled("q", "point x:Q1:linear y:Q2:log", "bar x:N:categorical y:Q1/mean:linear", 0);
    const auto quad = pair_to_examples(p);
    const std::size_t dim = builtin_catalog().size();
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g(0.0, 0.3);
    for (int point = 0; point < 20; ++point) {
        std::vector<double> w(dim);
        for (auto& v : w) v = g(rng);
        const double b = g(rng);
        std::vector<double> gw, gw_flip;
        double gb = 0, gb_flip = 0;
        logistic_objective(quad, w, b, 0.0, &gw, &gb);
        auto flipped = quad;
        for (auto& e : flipped) e.y = -e.y;
        logistic_objective(flipped, w, b, 0.0, &gw_flip, &gb_flip);
        double z = b;
        for (std::size_t i = 0; i < dim; ++i) z += w[i] * quad[0].x[i];
        const double zr = 2 * b - z;
        const double coef = (std::tanh(z / 2) - std::tanh(zr / 2)) / 4.0;
        for (std::size_t i = 0; i < dim; ++i) {
            CHECK(std::abs(gw[i] - gw_flip[i]) < 1e-12);
            CHECK(std::abs(gw[i] - coef * quad[0].x[i]) < 1e-12);
        }
        CHECK(std::abs(gb - (std::tanh(z / 2) + std::tanh(zr / 2)) / 4.0) < 1e-12);
    }
    // at the origin the quadruple contributes nothing
    std::vector<double> gw;
    double gb = 1;
    logistic_objective(quad, std::vector<double>(dim, 0.0), 0.0, 0.0, &gw, &gb);
    for (double v : gw) CHECK(v == 0.0);
    CHECK(gb == 0.0);
    CHECK(sigmoid(0.0) == 0.5);
}

TEST_CASE("train_logistic") {
    const auto ex = separable(200, 6, 11);
    TrainConfig cfg;
    cfg.seed = 3;
    const auto m = train_logistic(ex, names(6), cfg);
    CHECK(training_accuracy(m, ex) >= 0.99);
    CHECK(m.family == ModelFamily::logistic);
    CHECK(m.epochs > 0);

    const auto again = train_logistic(ex, names(6), cfg);
    CHECK(again.coef == m.coef);
    CHECK(again.intercept == m.intercept);

    // twins only: (x, y) and (-x, -y)
    std::vector<TrainExample> twins;
    for (const auto& e : ex) {
        twins.push_back(e);
        auto r = e;
        for (auto& v : r.x) v = -v;
        r.y = -r.y;
        r.rotated = true;
        twins.push_back(r);
    }
    const auto t = train_logistic(twins, names(6), cfg);
    CHECK(std::abs(t.intercept) < 1e-3);
    for (const auto& e : twins) {
        auto neg = e.x;
        for (auto& v : neg) v = -v;
        CHECK(predict(t, neg) == -predict(t, e.x));
    }

    std::vector<TrainExample> one = {ex[0]};
    one[0].y = 1;
    CHECK_THROWS_AS(train_logistic(one, names(6), cfg), Error);
    CHECK(to_json(m).at("family") == "logistic");
}

TEST_CASE("train_linear_svm") {
    const auto ex = separable(200, 6, 12);
    const auto m = train_linear_svm(ex, names(6));
    CHECK(training_accuracy(m, ex) >= 0.99);
    CHECK(m.family == ModelFamily::linear_svm);

    std::vector<TrainExample> twins;
    for (const auto& e : ex) {
        twins.push_back(e);
        auto r = e;
        for (auto& v : r.x) v = -v;
        r.y = -r.y;
        twins.push_back(r);
    }
    CHECK(std::abs(train_linear_svm(twins, names(6)).intercept) < 1e-3);
    CHECK(parse_model_family("svm") == ModelFamily::linear_svm);
    CHECK(parse_model_family("lr") == ModelFamily::logistic);
    CHECK_THROWS_AS(parse_model_family("tree"), ParseError);
}

TEST_CASE("linear SVM sign pattern matches an exhaustive weight grid") {
    // four points in 2-D, separable only by a tilted boundary with an offset
    const std::vector<TrainExample> ex = {
        {{0.2, 1.0}, 1, "a", false},
        {{1.0, 0.6}, 1, "b", false},
        {{0.0, 0.2}, -1, "c", false},
        {{0.6, -0.4}, -1, "d", false},
    };
    int best_errors = 5;
    std::vector<int> best_pattern;
    for (int i = -40; i <= 40; ++i) {
        for (int j = -40; j <= 40; ++j) {
            for (int k = -40; k <= 40; ++k) {
                const double w0 = i * 0.05, w1 = j * 0.05, b = k * 0.05;
                int errors = 0;
                std::vector<int> pattern;
                for (const auto& e : ex) {
                    const double s = w0 * e.x[0] + w1 * e.x[1] + b;
                    const int sign = s > 0 ? 1 : (s < 0 ? -1 : 0);
                    pattern.push_back(sign);
                    errors += sign != e.y;
                }
                if (errors < best_errors) {
                    best_errors = errors;
                    best_pattern = pattern;
                }
            }
        }
    }
    REQUIRE(best_errors == 0);
    TrainConfig cfg;
    cfg.l2 = 0.0;
    const auto m = train_linear_svm(ex, {"u", "v"}, cfg);
    std::vector<int> got;
    for (const auto& e : ex) got.push_back(predict(m, e.x));
    CHECK(got == best_pattern);
}

TEST_CASE("coefficients_to_weights") {
    ModelCoefficients m;
    m.features = {"max", "min", "zero", "tiny_neg", "tiny_pos", "half", "neg_half"};
    m.coef = {1.223, -0.712, 0.0, -0.0003, 0.0004, 0.0025, -0.0025};
    m.intercept = 5.0;
    const auto w = coefficients_to_weights(m, 3);
    CHECK(w.weights.at("max") == 1223);
    CHECK(w.weights.at("min") == -712);
    CHECK(w.weights.at("zero") == 0);
    CHECK(w.weights.at("tiny_neg") == -1);
    CHECK(w.weights.at("tiny_pos") == 1);
    CHECK(w.weights.at("half") == 3);
    CHECK(w.weights.at("neg_half") == -3);
    CHECK(w.version == 3);
    CHECK(w.provenance == WeightProvenance::learned);
    CHECK(w.weights.size() == 7);
}

TEST_CASE("weight conversion preserves pairwise order beyond the rounding slack") {
    const auto pool = test::chart_pool(30);
    const auto& cat = builtin_catalog();
    std::mt19937_64 rng(21);
    std::normal_distribution<double> g(0.0, 0.05);
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    int checked = 0;
    for (int trial = 0; trial < 20; ++trial) {
        ModelCoefficients m;
        m.features = cat.names();
        for (std::size_t i = 0; i < m.features.size(); ++i) m.coef.push_back(g(rng));
        const auto w = coefficients_to_weights(m);
        for (int i = 0; i < 100; ++i) {
            const auto a = dense(extract_features(pool[pick(rng)], cat), cat);
            const auto b = dense(extract_features(pool[pick(rng)], cat), cat);
            double dc = 0, l1 = 0;
            std::int64_t dw = 0;
            for (std::size_t f = 0; f < a.size(); ++f) {
                const double d = a[f] - b[f];
                dc += m.coef[f] * d;
                dw += w.weights.at(m.features[f]) * static_cast<std::int64_t>(d);
                l1 += std::abs(d);
            }
            // |1000 c - w| <= 1 per feature
            if (std::abs(dc) * 1000.0 <= l1) continue;
            CHECK((dc > 0) == (dw > 0));
            ++checked;
        }
    }
    CHECK(checked > 1000);
}

TEST_CASE("cross_validate") {
    // a small catalog keeps the planted model well determined by 300 pairs
    const auto cat = builtin_catalog().subset({"value_point", "value_bar", "value_line", "encoding_color", "aggregate",
                                               "bin", "log_x", "log_y", "facet_row", "value_continuous_x",
                                               "c_d_overlap_point", "interesting_x"});
    const auto pool = test::chart_pool(60);
    const auto planted = test::planted_weights(17, cat);
    const auto pairs = test::planted_pairs(pool, planted, 300, 18, PairSource::corpus, cat);
    const auto plan = make_splits(pairs, 0.15, 5, 4);
    const auto r = cross_validate(pairs, plan, ModelFamily::logistic, {}, cat);
    CHECK(r.fold_accuracy.size() == 5);
    CHECK(r.mean >= 0.95);
    CHECK(cross_validate(pairs, plan, ModelFamily::linear_svm, {}, cat).mean >= 0.9);
    const auto again = cross_validate(pairs, plan, ModelFamily::logistic, {}, cat);
    CHECK(again.fold_accuracy == r.fold_accuracy);

    // labels unrelated to the charts
    auto noisy = pairs;
    std::mt19937_64 rng(5);
    for (auto& p : noisy) p.label = rng() % 2 ? 1 : -1;
    const auto chance = cross_validate(noisy, plan, ModelFamily::logistic, {}, cat);
    CHECK(chance.mean == doctest::Approx(0.5).epsilon(0.2));

    SplitPlan empty = plan;
    empty.folds[1].clear();
    CHECK_THROWS_AS(cross_validate(pairs, empty, ModelFamily::logistic, {}, cat), Error);
}
