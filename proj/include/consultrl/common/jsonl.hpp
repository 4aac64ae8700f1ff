#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace consultrl::jsonl {

// Parses every non-blank line of a JSONL file. An unterminated final line is
// kept if it parses, otherwise dropped as a torn write.
std::vector<nlohmann::json> read_file(const std::filesystem::path& path);

// Serializes each record on its own line and atomically replaces `path`
// (write to a sibling temp file, then rename).
void write_file(const std::filesystem::path& path,
                const std::vector<nlohmann::ordered_json>& records);

// Compact one-line dump; UTF-8 is passed through unescaped.
std::string dump_line(const nlohmann::ordered_json& record);

}  // namespace consultrl::jsonl
