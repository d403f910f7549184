#pragma once

#include <string>
#include <string_view>

namespace ddfv {

/// Shortest decimal that parses back to the identical double.
std::string format_double(double value);

/// Strict parse of a full token; throws ErrorKind::Parse on trailing garbage.
double parse_double(std::string_view token);

long long parse_integer(std::string_view token);

std::string_view trim(std::string_view s);

}  // namespace ddfv
