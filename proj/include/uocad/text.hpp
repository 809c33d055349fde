#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace uocad::text {

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double value);

/// Throws SchemaError on anything but a complete numeric token.
double parse_double(std::string_view token);
std::int64_t parse_int(std::string_view token);

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

/// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_iso8601(std::int64_t epoch_seconds);
std::int64_t parse_iso8601(std::string_view s);

/// Flat `key=value` documents. Blank lines and lines starting with '#' are
/// skipped; duplicate keys are an error.
using KeyValues = std::map<std::string, std::string, std::less<>>;
KeyValues parse_key_values(std::string_view content);
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace uocad::text
