#pragma once

#include <nlohmann/json.hpp>

#include "vizkb/chart.hpp"

namespace vizkb {

// Chart JSON schema version written to and accepted from documents.
inline constexpr int kChartSchemaVersion = 1;

// Chart document layout:
//   {"version": 1,
//    "dataset": {"name", "rows", "fields": [{"name", "type", "cardinality", "entropy",
//                                            "extent": [min, max], "interesting"}]},
//    "coordinates": "cartesian" | "polar",
//    "marks": [{"type", "encodings": [{"channel", "field" | "__count__", "aggregate",
//                                      "bin", "stack"}]}],
//    "scales": [{"channel", "type"}],
//    "facet": {"direction", "field", "bin"}}
// Omitted optional members take their defaults; "rows" defaults to the largest field
// cardinality.
nlohmann::json to_json(const Dataset& dataset);
nlohmann::json to_json(const FieldDef& field);
nlohmann::json to_json(const ChartSpec& spec);

Dataset dataset_from_json(const nlohmann::json& j);
FieldDef field_from_json(const nlohmann::json& j);
// Throws ParseError on malformed documents and StructuralError on dangling references.
ChartSpec chart_from_json(const nlohmann::json& j);

}  // namespace vizkb
