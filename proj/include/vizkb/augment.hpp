#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "vizkb/enumerator.hpp"
#include "vizkb/features.hpp"
#include "vizkb/pair.hpp"
#include "vizkb/primitives.hpp"

namespace vizkb {

// ---- design differences ----

// Tokens present on one side only, grouped by token group ("color", "y", "mark", ...).
// Within an entry no token appears on both sides.
struct DiffEntry {
    std::string group;
    TokenBag left;
    TokenBag right;
    bool operator==(const DiffEntry&) const = default;
};

struct DesignDifference {
    std::vector<DiffEntry> entries;  // sorted by group
    bool operator==(const DesignDifference&) const = default;
};

// Throws Error when both sides abstract to the same tokens.
DesignDifference extract_design_differences(const ChartSpec& left, const ChartSpec& right);
DesignDifference extract_design_differences(const DesignPair& pair);

// Token bag of the right side rebuilt from the left side and the difference.
TokenBag apply_difference(const TokenBag& left, const DesignDifference& diff);

nlohmann::json to_json(const DesignDifference& d);

// ---- primitive augmentation ----

struct PrimitiveAugmentOptions {
    std::size_t max_new = 7;
    std::size_t max_completions = 5000;  // per side
};

// New pairs with exactly the origin's design differences, keeping data bindings,
// coordinates and layer/encoding counts of each side. Pairs changing the fewest
// shared primitives come first (ties in canonical order). Unlabeled.
std::vector<DesignPair> primitive_augment(const DesignPair& pair, const PrimitiveAugmentOptions& opt = {});

// ---- coverage ----

struct CoverageReport {
    std::map<std::string, std::int64_t> frequencies;  // total occurrences over all charts
    std::map<std::string, std::int64_t> presence;     // charts with at least one occurrence
    std::size_t charts = 0;
    std::int64_t threshold = 7;
    std::set<std::string> under_covered;  // frequency < threshold

    double presence_fraction(const std::string& feature) const;
};

CoverageReport coverage_report(const std::vector<DesignPair>& corpus, const FeatureCatalog& catalog,
                               std::int64_t threshold = 7);
nlohmann::json to_json(const CoverageReport& r);

// Relative frequency per feature: occurrences over all charts divided by the chart count.
std::map<std::string, double> relative_frequencies(const CoverageReport& r);

// ---- dependencies ----

enum class Relation { provokes, contradicts };
std::string_view to_string(Relation r);

struct DependencyGraph {
    std::vector<std::string> nodes;
    std::set<std::tuple<std::string, Relation, std::string>> edges;
    std::vector<std::string> undetermined;  // never observed in the probe set

    bool has(const std::string& a, Relation r, const std::string& b) const;
    // Connected by any relation in either direction.
    bool related(const std::string& a, const std::string& b) const;
};

// a provokes b: every probe chart with a also has b, but not conversely.
// a contradicts b: both occur, never in the same chart (stored both ways).
DependencyGraph analyze_dependencies(const std::vector<ChartSpec>& probe, const FeatureCatalog& catalog);
nlohmann::json to_json(const DependencyGraph& g);

// ---- feature ablation ----

struct AugmentWarning {
    std::string subject;  // feature name, feature pair or seed name
    std::string reason;
    bool operator==(const AugmentWarning&) const = default;
};

struct AblationOptions {
    std::uint64_t seed = 0;
    EnumerationBounds bounds{200, 20, std::nullopt, 20'000'000};
    const FeatureCatalog* catalog = nullptr;  // builtin when null
};

struct AugmentResult {
    std::vector<DesignPair> pairs;
    std::vector<AugmentWarning> warnings;
};

// Pairs (with feature, without feature) completed from the same partial. Among the
// couples of one partial the one with the smallest L1 distance over the other
// features is taken first. Partials are visited in a seeded random order, round
// robin, until pairs_per_feature pairs exist. An unsatisfiable feature gives no
// pairs and a warning.
AugmentResult feature_augment_unary(const std::string& feature, const std::vector<PartialSpec>& partials,
                                    std::size_t pairs_per_feature = 7, const AblationOptions& opt = {});

enum class BinaryRejection { none, unknown_feature, same_feature, contradictory, provoking, too_common };
std::string_view to_string(BinaryRejection r);

struct BinaryAugmentResult : AugmentResult {
    BinaryRejection rejection = BinaryRejection::none;
};

// Ablates b with a present and with a absent. Rejects pairs related in the graph
// and, when coverage is given, features present in more than max_presence of charts.
BinaryAugmentResult feature_augment_binary(const std::string& a, const std::string& b,
                                           const std::vector<PartialSpec>& partials, const DependencyGraph& graph,
                                           const CoverageReport* coverage = nullptr,
                                           std::size_t pairs_per_context = 2, const AblationOptions& opt = {},
                                           double max_presence = 0.9);

// ---- seed augmentation ----

struct SeedDataSpec {
    std::string name;
    std::vector<FieldDef> fields;
    std::int64_t rows = 0;  // 0: the largest field cardinality
    int layer_count = 1;
    int encoding_count = 2;
    bool operator==(const SeedDataSpec&) const = default;
};

PartialSpec seed_partial(const SeedDataSpec& seed);
nlohmann::json to_json(const SeedDataSpec& s);
SeedDataSpec seed_from_json(const nlohmann::json& j);
std::vector<SeedDataSpec> read_seeds(const std::string& path);  // JSON array or {"seeds": [...]}

struct SeedOptions {
    std::size_t n_top = 8;
    EnumerationBounds bounds{600, 20, std::nullopt, 20'000'000};
    const FeatureCatalog* catalog = nullptr;
};

// All couples of the n_top lowest distinct-cost designs per seed, labeled by w.
// Orientation alternates so both label values occur.
AugmentResult seed_augment(const std::vector<SeedDataSpec>& seeds, const WeightTable& w,
                           const SeedOptions& opt = {});

// ---- legibility ----

struct Legibility {
    bool illegible = false;
    std::string reason;
    std::int64_t estimated_marks = 0;
};

Legibility flag_illegible(const ChartSpec& spec, std::int64_t density_cap = 300);

// Sets illegible_hint when either side is flagged. The pair stays in the corpus;
// only a labeler removes it.
void flag_pair(DesignPair& pair, std::int64_t density_cap = 300);

}  // namespace vizkb
