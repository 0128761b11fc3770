#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "vizkb/chart.hpp"

namespace vizkb {

// Thresholds used by the built-in catalog.
inline constexpr int kBinHighThreshold = 12;            // bins >= 12 count as bin_high
inline constexpr std::int64_t kHighCardinality = 20;    // cardinality > 20 is high

// Derived per-encoding facts shared by all predicates of one extraction.
struct EncodingFacts {
    const EncodingDef* enc = nullptr;
    const FieldDef* field = nullptr;  // null for the count sentinel
    std::optional<ScaleType> scale;
    bool discrete = false;    // binned, or on an ordinal/categorical scale
    bool continuous = false;  // on a linear/log scale and not binned
    bool aggregated = false;
    std::int64_t cardinality = 0;  // effective distinct values when discrete
};

struct LayerFacts {
    MarkType mark = MarkType::point;
    std::vector<EncodingFacts> encodings;
    std::optional<EncodingFacts> x;
    std::optional<EncodingFacts> y;
    bool aggregated = false;
};

struct ChartFacts {
    const ChartSpec* spec = nullptr;
    std::vector<LayerFacts> layers;
};

ChartFacts analyze(const ChartSpec& spec);

using FeaturePredicate = std::function<std::int64_t(const ChartFacts&)>;

struct FeatureDef {
    std::string name;
    FeaturePredicate predicate;
    int default_weight = 0;
    std::string description;
};

class FeatureCatalog {
public:
    FeatureCatalog() = default;
    // Throws Error on duplicate names.
    explicit FeatureCatalog(std::vector<FeatureDef> defs);

    const std::vector<FeatureDef>& features() const { return defs_; }
    std::size_t size() const { return defs_.size(); }
    bool contains(std::string_view name) const;
    const FeatureDef& at(std::string_view name) const;  // throws UnknownFeature
    std::size_t index_of(std::string_view name) const;  // throws UnknownFeature
    std::vector<std::string> names() const;

    // Catalog restricted to the given names, in the given order.
    FeatureCatalog subset(const std::vector<std::string>& names) const;

private:
    std::vector<FeatureDef> defs_;
    std::map<std::string, std::size_t, std::less<>> index_;
};

// Sparse feature counts; an absent key means zero.
struct FeatureVector {
    std::map<std::string, std::int64_t> counts;

    std::int64_t get(std::string_view name) const;
    bool has(std::string_view name) const { return get(name) > 0; }
    std::int64_t total() const;
    FeatureVector operator+(const FeatureVector& other) const;
    bool operator==(const FeatureVector&) const = default;
};

enum class WeightProvenance { builtin, learned, manual };
std::string_view to_string(WeightProvenance p);
WeightProvenance parse_weight_provenance(std::string_view s);

struct WeightTable {
    std::map<std::string, std::int64_t> weights;
    int version = 1;
    WeightProvenance provenance = WeightProvenance::builtin;

    std::optional<std::int64_t> find(std::string_view name) const;
    bool operator==(const WeightTable&) const = default;
};

// The built-in soft-constraint catalog (63 features, immutable).
const FeatureCatalog& builtin_catalog();
WeightTable default_weights(const FeatureCatalog& catalog);

FeatureVector extract_features(const ChartSpec& spec, const FeatureCatalog& catalog);
FeatureVector extract_features(const ChartFacts& facts, const FeatureCatalog& catalog);

// Sum of weight * count. Throws Error naming the first feature without a weight.
std::int64_t cost(const FeatureVector& fv, const WeightTable& w);

// Dense view in catalog order.
std::vector<double> dense(const FeatureVector& fv, const FeatureCatalog& catalog);

nlohmann::json catalog_to_json(const FeatureCatalog& catalog, const WeightTable& w);
nlohmann::json to_json(const FeatureVector& fv);
nlohmann::json to_json(const WeightTable& w);
WeightTable weights_from_json(const nlohmann::json& j);

// CSV layout: "feature,weight" header then one row per feature. Lines starting
// with '#' are comments.
std::string weights_to_csv(const WeightTable& w, std::optional<std::uint64_t> seed = std::nullopt);
WeightTable weights_from_csv(std::string_view text);

// Loads ".csv" or ".json" by extension; the literal "builtin" gives default_weights.
WeightTable load_weights(const std::string& path_or_builtin, const FeatureCatalog& catalog);
void save_weights(const std::string& path, const WeightTable& w,
                  std::optional<std::uint64_t> seed = std::nullopt);

}  // namespace vizkb
