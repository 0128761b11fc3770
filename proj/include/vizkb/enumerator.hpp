#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vizkb/chart.hpp"
#include "vizkb/features.hpp"
#include "vizkb/primitives.hpp"

namespace vizkb {

enum class FacetMode { optional, forbidden, required };

// A channel that must encode a given field (or the count sentinel).
struct Binding {
    Channel channel = Channel::x;
    std::string field;
    bool operator==(const Binding&) const = default;
};

struct LayerFrame {
    int encoding_count = 1;
    std::vector<Binding> bindings;
    bool operator==(const LayerFrame&) const = default;
};

// Data plus the design facts a completion must contain.
struct PartialSpec {
    Dataset dataset;
    std::optional<Coordinates> coordinates;  // unset: cartesian
    std::vector<LayerFrame> layers;          // one frame per layer
    std::vector<std::string> use_fields;     // each must appear in an encoding or the facet
    TokenBag required;                       // fixed fragments as primitive tokens
    FacetMode facet = FacetMode::optional;
    std::optional<std::string> facet_field;  // restricts the facet field when faceting
    bool operator==(const PartialSpec&) const = default;
};

// Throws Error when the partial cannot be completed by construction (bad counts,
// unknown fields, bindings repeating a channel, two scale types required on one channel).
void check_partial(const PartialSpec& partial);

struct EnumerationBounds {
    std::size_t max_results = 1000;
    std::optional<std::int64_t> max_feature_count;  // cap on total feature occurrences
    std::optional<std::int64_t> cost_cap;           // requires weights
    std::size_t node_cap = 20'000'000;              // search nodes before BudgetExceeded
};

struct Enumeration {
    std::vector<ChartSpec> specs;  // canonical order
    std::size_t matched = 0;       // completions passing every filter before max_results
    std::size_t nodes = 0;
    bool truncated() const { return matched > specs.size(); }
};

// All valid completions of the partial in canonical order. When more than
// max_results completions match, the lowest-cost ones are kept if weights are given,
// otherwise the canonically first ones. Throws BudgetExceeded when the search visits
// more than node_cap nodes.
//
// Grammar: mark x channel set x field per channel (each field used at most once per
// layer; the count sentinel only with the count aggregate) x transform (number
// fields: none, mean, sum, bin 10, bin 25) x scale per channel x facet (none, or
// row/col over string and boolean fields).
Enumeration complete(const PartialSpec& partial, const EnumerationBounds& bounds,
                     const FeatureCatalog& catalog = builtin_catalog(), const WeightTable* weights = nullptr);

// Completions where every forced feature is present and every forbidden feature
// absent. Throws Error when force and forbid overlap, UnknownFeature for names
// missing from the catalog.
Enumeration enumerate_constrained(const PartialSpec& partial, const std::set<std::string>& force,
                                  const std::set<std::string>& forbid, const EnumerationBounds& bounds,
                                  const FeatureCatalog& catalog = builtin_catalog(),
                                  const WeightTable* weights = nullptr);

// At most k specs with strictly increasing cost; each is the canonically first spec
// at its cost level.
std::vector<ChartSpec> top_k_distinct_cost(const std::vector<ChartSpec>& specs, const WeightTable& w,
                                           std::size_t k, const FeatureCatalog& catalog = builtin_catalog());

// Data-only partial of a chart: dataset, used fields, coordinates and per-layer
// encoding counts. Facets stay optional.
PartialSpec partial_from_chart(const ChartSpec& spec);

nlohmann::json to_json(const PartialSpec& p);
PartialSpec partial_from_json(const nlohmann::json& j);

}  // namespace vizkb
