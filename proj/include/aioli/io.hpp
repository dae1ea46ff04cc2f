#pragma once

#include <string>

namespace aioli::io {

// Shortest round-trip-safe text for a double: 17 significant digits,
// '.' decimal point regardless of locale.
std::string format_float(double v);

// Parses a decimal float with no locale dependence; throws InvalidInput.
double parse_float(const std::string& text);

// Writes to "<path>.tmp" then renames over path.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace aioli::io
