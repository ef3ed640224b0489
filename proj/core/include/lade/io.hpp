#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace lade::io {

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);

/// C99 hexadecimal float ("%a"); bit-exact through parse_hexfloat.
std::string format_hexfloat(double v);
double parse_hexfloat(const std::string& text);

double parse_double(const std::string& text);
long long parse_int(const std::string& text);

std::vector<std::string> split(std::string_view line, char sep);

/// CSV body split into non-empty lines with '#' comment lines removed.
std::vector<std::string> csv_lines(const std::string& text);

std::string read_file(const std::filesystem::path& path);

/// Write-temp-then-rename so concurrent readers never observe a torn file.
void atomic_write_file(const std::filesystem::path& path, const std::string& content);

std::uint64_t fnv1a64(std::string_view text);

}  // namespace lade::io
