#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "vizkb/llm.hpp"

namespace vizkb {

struct ProjectConfig {
    // paths
    std::string catalog;  // empty: built-in catalog
    std::string corpus;
    std::string labels;
    std::string weights = "builtin";

    std::uint64_t seed = 0;

    // augmentation and labeling parameters
    std::int64_t threshold = 7;
    std::size_t max_new = 7;
    std::size_t pairs_per_feature = 7;
    std::size_t n_top = 8;
    std::size_t batch = 20;
    std::size_t iterations = 20;
    std::int64_t density_cap = 300;
    std::size_t max_results = 600;
    std::int64_t max_feature_count = 20;

    LlmConfig llm;
};

// Missing keys keep their defaults. Throws Error when a count is below 1.
ProjectConfig config_from_json(const nlohmann::json& j);
ProjectConfig load_config(const std::string& path);
nlohmann::json to_json(const ProjectConfig& c);
void check_config(const ProjectConfig& c);

}  // namespace vizkb
