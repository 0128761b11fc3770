#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vizkb/features.hpp"
#include "vizkb/pair.hpp"

namespace vizkb {

// Label-0 pairs comply when their costs differ by at most this many units.
inline constexpr std::int64_t kNearTie = 2;

enum class ComplianceRule { strict_order, near_tie, duplicate_inconsistent };
std::string_view to_string(ComplianceRule r);

struct ComplianceResult {
    std::string pair_id;
    bool compliant = false;
    std::int64_t cost_left = 0;
    std::int64_t cost_right = 0;
    ComplianceRule rule = ComplianceRule::strict_order;
};

// One orientation: -1 needs left strictly cheaper, +1 right strictly cheaper,
// 0 needs |cost_left - cost_right| <= kNearTie.
bool judge(std::int64_t cost_left, std::int64_t cost_right, int label);

struct Orientation {
    std::int64_t cost_left = 0;
    std::int64_t cost_right = 0;
    int label = 0;
};

// Judges every orientation; disagreeing verdicts make the pair non-compliant.
ComplianceResult combine(const std::string& pair_id, const std::vector<Orientation>& orientations);

// The pair as stored and swapped. Throws Error when unlabeled.
ComplianceResult compliance(const DesignPair& pair, const WeightTable& w,
                            const FeatureCatalog& catalog = builtin_catalog());

// Compliance of every labeled, legible pair. Pairs showing the same two designs
// (in either order) are judged together, so conflicting duplicates fail.
std::vector<ComplianceResult> compliance_all(const std::vector<DesignPair>& pairs, const WeightTable& w,
                                             const FeatureCatalog& catalog = builtin_catalog());

struct AccuracyRow {
    std::string slice;  // "all", "source", "provenance", "group"
    std::string value;
    std::size_t n = 0;
    std::size_t compliant = 0;
    std::optional<double> accuracy;  // unset when n = 0
};

// Rows for all pairs, every source, every label provenance and every data group.
// Illegible pairs are left out; unlabeled pairs throw Error.
std::vector<AccuracyRow> accuracy(const std::vector<DesignPair>& pairs, const WeightTable& w,
                                  const FeatureCatalog& catalog = builtin_catalog());
double overall_accuracy(const std::vector<AccuracyRow>& rows);

nlohmann::json to_json(const std::vector<AccuracyRow>& rows);
std::string accuracy_to_csv(const std::vector<AccuracyRow>& rows);

struct WeightShift {
    std::string feature;
    std::int64_t before = 0;
    std::int64_t after = 0;
    double frequency = 0.0;
    double shift = 0.0;  // (after - before) * frequency
};

// Sorted by |shift| descending, then by name. Throws Error when the tables have
// different feature domains.
std::vector<WeightShift> weight_shift_report(const WeightTable& before, const WeightTable& after,
                                             const std::map<std::string, double>& frequency);
std::string shift_to_csv(const std::vector<WeightShift>& rows);
nlohmann::json to_json(const std::vector<WeightShift>& rows);

double cosine(const FeatureVector& a, const FeatureVector& b);

struct CosineMatrix {
    std::vector<std::string> groups;
    std::vector<std::vector<std::optional<double>>> cells;  // unset: undefined
    std::map<std::string, std::size_t> zero_vectors;        // excluded per group
};

// Mean pairwise cosine between groups; the diagonal uses distinct pairs within a
// group and is undefined with fewer than two nonzero vectors.
CosineMatrix group_cosine_similarity(const std::map<std::string, std::vector<FeatureVector>>& groups);
std::string cosine_to_csv(const CosineMatrix& m);
nlohmann::json to_json(const CosineMatrix& m);

}  // namespace vizkb
