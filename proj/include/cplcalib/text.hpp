#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cplcalib {

// Shortest-faithful decimal form: %.17g guarantees the exact double is
// recovered on parse, which the file formats rely on.
std::string format_g17(double value);

// Strict double parse of an entire token. Throws IoError on anything else.
double parse_double(std::string_view token);

std::vector<std::string_view> split(std::string_view line, char delimiter);

}  // namespace cplcalib
