#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "vizkb/chart.hpp"

namespace vizkb {

enum class PairSource { corpus, primitive_aug, feature_aug_unary, feature_aug_binary, seed_aug };
enum class LabelProvenance { manual, ml, active_ml, llm, seed_weights, none };

std::string_view to_string(PairSource s);
std::string_view to_string(LabelProvenance p);
PairSource parse_pair_source(std::string_view s);
LabelProvenance parse_label_provenance(std::string_view s);

struct Lineage {
    std::string origin;                 // id of the pair this one was derived from
    std::vector<std::string> ablated;   // ablated features, in ablation order
    std::string context;                // e.g. "with:aggregate" for binary ablation
    std::string with_side;              // "left" or "right" for ablation pairs
    std::optional<std::uint64_t> seed;  // RNG seed of the producing run
    bool operator==(const Lineage&) const = default;
};

// Label convention: -1 means the left chart is preferred, +1 the right one, 0 equal.
struct DesignPair {
    std::string id;
    ChartSpec left;
    ChartSpec right;
    std::optional<int> label;
    PairSource source = PairSource::corpus;
    LabelProvenance provenance = LabelProvenance::none;
    std::optional<Lineage> lineage;
    bool illegible = false;        // removed by a labeler; left out of training and evaluation
    std::string illegible_reason;
    std::string illegible_hint;    // advisory density warning, see flag_pair
    std::string group;  // data group, e.g. the originating study

    bool operator==(const DesignPair&) const = default;
};

// Throws Error when the sides are the same design, the label is outside
// {-1, 0, 1}, or a label has no provenance.
void check_pair(const DesignPair& p);

// The same pair seen from the other side: sides swapped, label negated.
DesignPair swapped(DesignPair p);

nlohmann::json to_json(const DesignPair& p);
DesignPair pair_from_json(const nlohmann::json& j);

std::vector<DesignPair> read_pairs(const std::string& path);
void write_pairs(const std::string& path, const std::vector<DesignPair>& pairs);
std::string pairs_to_jsonl(const std::vector<DesignPair>& pairs);

}  // namespace vizkb
