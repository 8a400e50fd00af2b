#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace pbart::text {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

/// Whole-token parses; return false on any trailing garbage.
bool parse_double(std::string_view token, double& out);
bool parse_uint(std::string_view token, unsigned long long& out);
bool parse_int(std::string_view token, long long& out);

std::vector<std::string_view> split(std::string_view line, char sep);
std::vector<std::string_view> split_whitespace(std::string_view line);
std::string_view trim(std::string_view s);

}  // namespace pbart::text
