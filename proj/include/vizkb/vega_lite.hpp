#pragma once

#include <nlohmann/json.hpp>

#include "vizkb/chart.hpp"

namespace vizkb {

inline constexpr const char* kVegaLiteSchema = "https://vega.github.io/schema/vega-lite/v5.json";

// Vega-Lite v5 document for a chart. Data is referenced by the dataset name;
// polar charts are marked in usermeta since the cartesian encodings are kept.
nlohmann::json to_vega_lite(const ChartSpec& spec);

}  // namespace vizkb
