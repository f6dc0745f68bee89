#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

namespace causeprobe::io {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path);
// Writes via a temporary sibling and rename, so readers never see a
// half-written artifact. Creates parent directories.
void write_file(const std::filesystem::path& path, std::string_view content);

// Parse errors carry 1-based line/column computed from the byte offset.
json parse_json(std::string_view text, const std::string& source);
json load_json(const std::filesystem::path& path);

// Throws ValidationError naming the first field not in `allowed`.
void reject_unknown_fields(const json& object, std::initializer_list<std::string_view> allowed,
                           const std::string& context);

// Required typed accessors; throw ValidationError with `context` on mismatch.
const json& require(const json& object, std::string_view key, const std::string& context);
std::string require_string(const json& object, std::string_view key, const std::string& context);

// Stable textual rendering used for artifacts (2-space indent, trailing newline).
std::string dump_pretty(const json& value);

// Backslash escaping for one-record-per-line tab-separated files:
// \\ \t \n \r are escaped, everything else is passed through.
std::string escape_field(std::string_view raw);
std::string unescape_field(std::string_view escaped);

std::string lowercase(std::string_view s);
std::string trim(std::string_view s);

}  // namespace causeprobe::io
