#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace canopy {

using CsvRow = std::vector<std::string>;

// Minimal comma-separated reader: no quoting, blank lines and '#' comments
// skipped, fields trimmed.
std::vector<CsvRow> parse_csv(std::string_view text);

std::string trim(std::string_view s);
double parse_double(std::string_view s, std::string_view what);
long parse_int(std::string_view s, std::string_view what);
bool parse_bool(std::string_view s, std::string_view what);

// Fixed 6-significant-digit rendering used by every text artifact.
std::string fmt6(double v);
// Round-trips a double through its 6-significant-digit rendering.
double round6(double v);

std::string read_text_file(const std::string& path);

}  // namespace canopy
