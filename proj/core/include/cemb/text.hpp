#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cemb::text {

/// Shortest "%.17g" rendering; parses back to the identical double.
std::string format_real(double v);

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

/// Strict parsers: the whole (trimmed) field must be consumed. Return false on failure.
bool parse_real(std::string_view s, double& out);
bool parse_size(std::string_view s, std::size_t& out);

}  // namespace cemb::text
