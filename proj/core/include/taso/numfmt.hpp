#pragma once

#include <string>
#include <string_view>

namespace taso {

/// Shortest decimal that parses back to the identical double.
std::string format_double(double value);

/// Strict parse of a full decimal string; throws InputError on garbage.
double parse_double(std::string_view text);

}  // namespace taso
