#pragma once

// Small helpers shared by the line-oriented file formats.

#include <string>
#include <string_view>
#include <vector>

namespace lod3::text {

/// Whitespace tokenization. Empty tokens are never produced.
std::vector<std::string_view> split(std::string_view line);

/// Strips leading/trailing whitespace.
std::string_view trim(std::string_view s);

/// True for blank lines and lines whose first non-blank char is '#'.
bool is_blank_or_comment(std::string_view line);

/// Strict number parsing; throws ParseError naming `what` on failure.
double parse_double(std::string_view token, std::string_view what);
float parse_float(std::string_view token, std::string_view what);
long long parse_int(std::string_view token, std::string_view what);

/// Shortest representation that round-trips exactly.
std::string format_double(double value);
std::string format_float(float value);

/// Fixed-point with `decimals` digits; negative zero is printed as zero.
std::string format_fixed(double value, int decimals);

/// Reads a whole file; throws IoError.
std::string read_file(const std::string& path);

/// Writes a whole file; throws IoError.
void write_file(const std::string& path, std::string_view content);

/// Splits `key=value`; returns false if there is no '='.
bool split_key_value(std::string_view token, std::string_view& key, std::string_view& value);

}  // namespace lod3::text
