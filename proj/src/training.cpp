#include "vizkb/training.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "vizkb/error.hpp"
#include "vizkb/evaluate.hpp"

namespace vizkb {

using nlohmann::json;

std::vector<TrainExample> pair_to_examples(const DesignPair& pair, const FeatureCatalog& catalog) {
    if (!pair.label) throw Error("pair '" + pair.id + "' is unlabeled");
    std::vector<double> x = dense(extract_features(pair.left, catalog), catalog);
    const std::vector<double> r = dense(extract_features(pair.right, catalog), catalog);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= r[i];
    std::vector<double> neg(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) neg[i] = x[i] == 0.0 ? 0.0 : -x[i];
    const int y = *pair.label;
    if (y != 0) return {{x, y, pair.id, false}, {neg, -y, pair.id, true}};
    return {{x, -1, pair.id, false}, {x, 1, pair.id, false}, {neg, -1, pair.id, true}, {neg, 1, pair.id, true}};
}

std::vector<TrainExample> to_examples(const std::vector<DesignPair>& pairs, const FeatureCatalog& catalog) {
    std::vector<TrainExample> out;
    for (const auto& p : pairs) {
        if (p.illegible) continue;
        auto ex = pair_to_examples(p, catalog);
        out.insert(out.end(), std::make_move_iterator(ex.begin()), std::make_move_iterator(ex.end()));
    }
    return out;
}

// ---- splits ----

int SplitPlan::cell_of(const std::string& pair_id) const {
    if (std::find(holdout.begin(), holdout.end(), pair_id) != holdout.end()) return -1;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        if (std::find(folds[f].begin(), folds[f].end(), pair_id) != folds[f].end()) return static_cast<int>(f);
    }
    throw Error("pair '" + pair_id + "' is not in the split plan");
}

SplitPlan make_splits(const std::vector<DesignPair>& pairs, double holdout_frac, std::size_t k, std::uint64_t seed) {
    if (k < 1) throw Error("need at least one fold");
    if (holdout_frac < 0.0 || holdout_frac >= 1.0) throw Error("holdout fraction must be in [0, 1)");
    const std::size_t n = pairs.size();
    if (n < k + 1) throw Error("need at least " + std::to_string(k + 1) + " pairs to split, got " + std::to_string(n));
    const auto target = static_cast<std::size_t>(std::llround(holdout_frac * static_cast<double>(n)));
    if (n - target < k) throw Error("too few pairs left for " + std::to_string(k) + " folds");

    std::map<std::string, std::vector<std::string>> strata;
    std::set<std::string> ids;
    for (const auto& p : pairs) {
        if (!ids.insert(p.id).second) throw Error("duplicate pair id '" + p.id + "'");
        strata[std::string(to_string(p.source)) + "/" + p.group].push_back(p.id);
    }
    std::mt19937_64 rng(seed);
    for (auto& [_, members] : strata) std::shuffle(members.begin(), members.end(), rng);

    // largest-remainder apportionment of the holdout over strata
    struct Share {
        std::string key;
        std::size_t take;
        double remainder;
    };
    std::vector<Share> shares;
    std::size_t assigned = 0;
    for (const auto& [key, members] : strata) {
        const double exact = static_cast<double>(target) * static_cast<double>(members.size()) / static_cast<double>(n);
        const auto base = static_cast<std::size_t>(std::floor(exact));
        shares.push_back({key, base, exact - static_cast<double>(base)});
        assigned += base;
    }
    std::vector<std::size_t> order(shares.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return shares[a].remainder > shares[b].remainder; });
    for (std::size_t i = 0; assigned < target; i = (i + 1) % order.size()) {
        Share& s = shares[order[i]];
        if (s.take < strata[s.key].size()) {
            ++s.take;
            ++assigned;
        }
    }

    SplitPlan plan;
    plan.seed = seed;
    plan.folds.assign(k, {});
    std::size_t dealt = 0;
    for (const auto& s : shares) {
        const auto& members = strata[s.key];
        for (std::size_t i = 0; i < members.size(); ++i) {
            if (i < s.take) plan.holdout.push_back(members[i]);
            else plan.folds[dealt++ % k].push_back(members[i]);
        }
    }
    return plan;
}

json to_json(const SplitPlan& plan) {
    return {{"seed", plan.seed}, {"holdout", plan.holdout}, {"folds", plan.folds}};
}

SplitPlan split_plan_from_json(const json& j) {
    SplitPlan p;
    try {
        p.seed = j.value("seed", std::uint64_t{0});
        p.holdout = j.at("holdout").get<std::vector<std::string>>();
        p.folds = j.at("folds").get<std::vector<std::vector<std::string>>>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("split plan: ") + e.what());
    }
    return p;
}

// ---- models ----

std::string_view to_string(ModelFamily f) { return f == ModelFamily::logistic ? "logistic" : "linear_svm"; }

ModelFamily parse_model_family(std::string_view s) {
    if (s == "logistic" || s == "lr") return ModelFamily::logistic;
    if (s == "linear_svm" || s == "svm") return ModelFamily::linear_svm;
    throw ParseError("unknown model family '" + std::string(s) + "'");
}

namespace {

double score(const std::vector<double>& w, double b, const std::vector<double>& x) {
    double z = b;
    for (std::size_t i = 0; i < x.size(); ++i) z += w[i] * x[i];
    return z;
}

double softplus(double t) { return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }
double sigmoid(double t) {
    if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

void check_inputs(const std::vector<TrainExample>& ex, const std::vector<std::string>& features) {
    bool pos = false, neg = false;
    for (const auto& e : ex) {
        if (e.x.size() != features.size()) throw Error("example width does not match the feature list");
        pos = pos || e.y > 0;
        neg = neg || e.y < 0;
    }
    if (!pos || !neg) throw Error("training needs examples of both classes");
}

using Objective = double (*)(const std::vector<TrainExample>&, const std::vector<double>&, double, double,
                             std::vector<double>*, double*);

ModelCoefficients descend(ModelFamily family, Objective objective, const std::vector<TrainExample>& ex,
                          const std::vector<std::string>& features, const TrainConfig& config) {
    check_inputs(ex, features);
    const std::size_t d = features.size();
    ModelCoefficients m;
    m.features = features;
    m.family = family;
    m.config = config;
    m.coef.assign(d, 0.0);
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> init(0.0, config.init_scale);
    for (auto& c : m.coef) c = config.init_scale > 0 ? init(rng) : 0.0;

    double mean_sq = 0.0;
    for (const auto& e : ex) {
        for (double v : e.x) mean_sq += v * v;
    }
    mean_sq = mean_sq / static_cast<double>(ex.size()) + 1.0;
    const bool smooth = family == ModelFamily::logistic;
    // 0.25 * E|x|^2 bounds the curvature of the mean logistic loss
    double lr = config.learning_rate;
    if (lr <= 0.0) lr = smooth ? 1.0 / (0.25 * mean_sq + config.l2) : 1.0 / std::sqrt(mean_sq);

    std::vector<double> gw(d);
    double gb = 0.0;
    double loss = objective(ex, m.coef, m.intercept, config.l2, &gw, &gb);
    std::vector<double> best_w = m.coef;
    double best_b = m.intercept, best_loss = loss;
    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const double step = smooth ? lr : lr / std::sqrt(static_cast<double>(epoch));
        for (std::size_t i = 0; i < d; ++i) m.coef[i] -= step * gw[i];
        m.intercept -= step * gb;
        const double next = objective(ex, m.coef, m.intercept, config.l2, &gw, &gb);
        if (!std::isfinite(next)) {
            throw Error("training diverged at epoch " + std::to_string(epoch) + " (loss " + std::to_string(next) +
                        ", previous " + std::to_string(loss) + ", step " + std::to_string(step) + ")");
        }
        m.epochs = epoch;
        const double delta = std::abs(loss - next);
        loss = next;
        if (loss < best_loss) {
            best_loss = loss;
            best_w = m.coef;
            best_b = m.intercept;
        }
        if (delta < config.tolerance) {
            m.converged = true;
            break;
        }
    }
    if (!smooth) {
        // subgradient steps are not monotone; keep the best iterate
        m.coef = best_w;
        m.intercept = best_b;
        loss = best_loss;
    }
    m.loss = loss;
    return m;
}

}  // namespace

double logistic_objective(const std::vector<TrainExample>& ex, const std::vector<double>& w, double b, double l2,
                          std::vector<double>* grad_w, double* grad_b) {
    const double n = static_cast<double>(ex.size());
    double loss = 0.0;
    if (grad_w) grad_w->assign(w.size(), 0.0);
    if (grad_b) *grad_b = 0.0;
    for (const auto& e : ex) {
        const double m = static_cast<double>(e.y) * score(w, b, e.x);
        loss += softplus(-m);
        const double g = -static_cast<double>(e.y) * sigmoid(-m) / n;
        if (grad_w) {
            for (std::size_t i = 0; i < w.size(); ++i) (*grad_w)[i] += g * e.x[i];
        }
        if (grad_b) *grad_b += g;
    }
    loss /= n;
    double reg = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        reg += w[i] * w[i];
        if (grad_w) (*grad_w)[i] += l2 * w[i];
    }
    return loss + 0.5 * l2 * reg;
}

double hinge_objective(const std::vector<TrainExample>& ex, const std::vector<double>& w, double b, double l2,
                       std::vector<double>* grad_w, double* grad_b) {
    const double n = static_cast<double>(ex.size());
    double loss = 0.0;
    if (grad_w) grad_w->assign(w.size(), 0.0);
    if (grad_b) *grad_b = 0.0;
    for (const auto& e : ex) {
        const double m = static_cast<double>(e.y) * score(w, b, e.x);
        if (m >= 1.0) continue;
        loss += 1.0 - m;
        const double g = -static_cast<double>(e.y) / n;
        if (grad_w) {
            for (std::size_t i = 0; i < w.size(); ++i) (*grad_w)[i] += g * e.x[i];
        }
        if (grad_b) *grad_b += g;
    }
    loss /= n;
    double reg = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        reg += w[i] * w[i];
        if (grad_w) (*grad_w)[i] += l2 * w[i];
    }
    return loss + 0.5 * l2 * reg;
}

ModelCoefficients train_logistic(const std::vector<TrainExample>& ex, const std::vector<std::string>& features,
                                 const TrainConfig& config) {
    return descend(ModelFamily::logistic, &logistic_objective, ex, features, config);
}

ModelCoefficients train_linear_svm(const std::vector<TrainExample>& ex, const std::vector<std::string>& features,
                                   const TrainConfig& config) {
    return descend(ModelFamily::linear_svm, &hinge_objective, ex, features, config);
}

ModelCoefficients train(ModelFamily family, const std::vector<TrainExample>& ex,
                        const std::vector<std::string>& features, const TrainConfig& config) {
    return family == ModelFamily::logistic ? train_logistic(ex, features, config)
                                           : train_linear_svm(ex, features, config);
}

int predict(const ModelCoefficients& m, const std::vector<double>& x) {
    const double z = score(m.coef, m.intercept, x);
    return z > 0 ? 1 : (z < 0 ? -1 : 0);
}

double training_accuracy(const ModelCoefficients& m, const std::vector<TrainExample>& ex) {
    if (ex.empty()) return 0.0;
    std::size_t ok = 0;
    for (const auto& e : ex) ok += predict(m, e.x) == e.y ? 1 : 0;
    return static_cast<double>(ok) / static_cast<double>(ex.size());
}

json to_json(const ModelCoefficients& m) {
    json coef = json::object();
    for (std::size_t i = 0; i < m.features.size(); ++i) coef[m.features[i]] = m.coef[i];
    return {{"family", to_string(m.family)},
            {"coefficients", std::move(coef)},
            {"intercept", m.intercept},
            {"epochs", m.epochs},
            {"converged", m.converged},
            {"loss", m.loss},
            {"seed", m.config.seed},
            {"l2", m.config.l2},
            {"learning_rate", m.config.learning_rate},
            {"max_epochs", m.config.max_epochs},
            {"tolerance", m.config.tolerance}};
}

WeightTable coefficients_to_weights(const ModelCoefficients& m, int version) {
    WeightTable w;
    w.version = version;
    w.provenance = WeightProvenance::learned;
    for (std::size_t i = 0; i < m.features.size(); ++i) {
        const double c = m.coef[i];
        if (!std::isfinite(c)) throw Error("coefficient of '" + m.features[i] + "' is not finite");
        std::int64_t v = std::llround(1000.0 * c);
        if (v == 0 && c != 0.0) v = c > 0 ? 1 : -1;
        w.weights[m.features[i]] = v;
    }
    return w;
}

CvResult cross_validate(const std::vector<DesignPair>& pairs, const SplitPlan& plan, ModelFamily family,
                        const TrainConfig& config, const FeatureCatalog& catalog) {
    std::map<std::string, int> cell;
    for (const auto& id : plan.holdout) cell[id] = -1;
    for (std::size_t f = 0; f < plan.folds.size(); ++f) {
        for (const auto& id : plan.folds[f]) cell[id] = static_cast<int>(f);
    }
    CvResult out;
    const auto names = catalog.names();
    for (std::size_t f = 0; f < plan.folds.size(); ++f) {
        std::vector<DesignPair> train_pairs, test_pairs;
        for (const auto& p : pairs) {
            auto it = cell.find(p.id);
            if (it == cell.end() || it->second < 0) continue;
            (it->second == static_cast<int>(f) ? test_pairs : train_pairs).push_back(p);
        }
        std::erase_if(test_pairs, [](const DesignPair& p) { return p.illegible; });
        if (test_pairs.empty()) throw Error("fold " + std::to_string(f + 1) + " has no pairs");
        const ModelCoefficients m = train(family, to_examples(train_pairs, catalog), names, config);
        const WeightTable w = coefficients_to_weights(m);
        out.fold_accuracy.push_back(overall_accuracy(accuracy(test_pairs, w, catalog)));
    }
    out.mean = std::accumulate(out.fold_accuracy.begin(), out.fold_accuracy.end(), 0.0) /
               static_cast<double>(out.fold_accuracy.size());
    return out;
}

}  // namespace vizkb
