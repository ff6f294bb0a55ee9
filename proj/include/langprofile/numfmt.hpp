#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace langprofile {

/// Shortest decimal text that reads back to exactly `x` ("2.5", "3", "-0.125").
std::string format_double(double x);

/// `x` rounded to `digits` significant decimal digits.
double round_significant(double x, int digits);

/// Parses a complete decimal number; nullopt on trailing garbage or empty input.
std::optional<double> parse_double(std::string_view s);

}  // namespace langprofile
