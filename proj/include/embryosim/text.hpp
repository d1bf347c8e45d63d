#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace embryosim::text {

// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);

std::vector<std::string_view> split(std::string_view line, char sep);
std::string_view trim(std::string_view s);

// Strict full-field parsers; return false on any trailing garbage.
bool parse_double(std::string_view s, double& out);
bool parse_int(std::string_view s, std::int64_t& out);

}  // namespace embryosim::text
