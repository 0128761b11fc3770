#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace vizkb {

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);
// Writes to a sibling temp file and renames it over the target.
void write_file_atomic(const std::string& path, const std::string& content);
void append_line(const std::string& path, const std::string& line);

nlohmann::json read_json(const std::string& path);
// One JSON value per non-empty line.
std::vector<nlohmann::json> read_jsonl(const std::string& path);
std::vector<nlohmann::json> parse_jsonl(const std::string& text);
std::string to_jsonl(const std::vector<nlohmann::json>& rows);

}  // namespace vizkb
