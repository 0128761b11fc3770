#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vizkb/features.hpp"
#include "vizkb/pair.hpp"

namespace vizkb {

// x = features(left) - features(right) in catalog order; y = -1 when the left
// chart is preferred.
struct TrainExample {
    std::vector<double> x;
    int y = 1;
    std::string pair_id;
    bool rotated = false;
};

// Labels -1/+1 give the example and its rotated twin; label 0 gives both
// orientations with both labels. Throws Error for unlabeled pairs.
std::vector<TrainExample> pair_to_examples(const DesignPair& pair, const FeatureCatalog& catalog = builtin_catalog());

// Examples for every labeled, legible pair.
std::vector<TrainExample> to_examples(const std::vector<DesignPair>& pairs,
                                      const FeatureCatalog& catalog = builtin_catalog());

struct SplitPlan {
    std::vector<std::string> holdout;
    std::vector<std::vector<std::string>> folds;
    std::uint64_t seed = 0;

    // -1 for the holdout, the fold index otherwise; throws Error for unknown ids.
    int cell_of(const std::string& pair_id) const;
};

// Holdout of round(holdout_frac * n) pairs, the rest dealt into k folds. Strata are
// (source, group) tags; each stratum contributes to the holdout in proportion to
// its size (largest remainder). Throws Error for fewer than k + 1 pairs or
// duplicate ids.
SplitPlan make_splits(const std::vector<DesignPair>& pairs, double holdout_frac = 0.15, std::size_t k = 5,
                      std::uint64_t seed = 0);

nlohmann::json to_json(const SplitPlan& plan);
SplitPlan split_plan_from_json(const nlohmann::json& j);

enum class ModelFamily { logistic, linear_svm };
std::string_view to_string(ModelFamily f);
ModelFamily parse_model_family(std::string_view s);

struct TrainConfig {
    double l2 = 1e-3;
    double learning_rate = 0.0;  // 0: derived from the data (1 / Lipschitz bound)
    std::size_t max_epochs = 20000;
    double tolerance = 1e-8;     // stop when the loss changes less than this
    std::uint64_t seed = 0;
    double init_scale = 0.01;    // std-dev of the initial coefficients
};

struct ModelCoefficients {
    std::vector<std::string> features;
    std::vector<double> coef;
    double intercept = 0.0;
    ModelFamily family = ModelFamily::logistic;
    std::size_t epochs = 0;
    bool converged = false;
    double loss = 0.0;
    TrainConfig config;
};

// Mean logistic loss plus l2/2 * |w|^2 (intercept unregularized). Fills the
// gradient when the output pointers are given.
double logistic_objective(const std::vector<TrainExample>& ex, const std::vector<double>& w, double b, double l2,
                          std::vector<double>* grad_w = nullptr, double* grad_b = nullptr);
double hinge_objective(const std::vector<TrainExample>& ex, const std::vector<double>& w, double b, double l2,
                       std::vector<double>* grad_w = nullptr, double* grad_b = nullptr);

// Full-batch gradient descent. Throws Error when a class is missing or the loss
// stops being finite.
ModelCoefficients train_logistic(const std::vector<TrainExample>& ex, const std::vector<std::string>& features,
                                 const TrainConfig& config = {});
ModelCoefficients train_linear_svm(const std::vector<TrainExample>& ex, const std::vector<std::string>& features,
                                   const TrainConfig& config = {});
ModelCoefficients train(ModelFamily family, const std::vector<TrainExample>& ex,
                        const std::vector<std::string>& features, const TrainConfig& config = {});

// Sign of w.x + b as a label; 0 when exactly on the boundary.
int predict(const ModelCoefficients& m, const std::vector<double>& x);
double training_accuracy(const ModelCoefficients& m, const std::vector<TrainExample>& ex);

nlohmann::json to_json(const ModelCoefficients& m);

// round(1000 * c), half away from zero; nonzero coefficients that would round to
// 0 keep their sign as +-1. The intercept is dropped.
WeightTable coefficients_to_weights(const ModelCoefficients& m, int version = 1);

struct CvResult {
    std::vector<double> fold_accuracy;
    double mean = 0.0;
};

// Train on all folds but one, score compliance accuracy of the converted weights
// on the held-out fold. Throws Error on an empty fold.
CvResult cross_validate(const std::vector<DesignPair>& pairs, const SplitPlan& plan, ModelFamily family,
                        const TrainConfig& config = {}, const FeatureCatalog& catalog = builtin_catalog());

}  // namespace vizkb
