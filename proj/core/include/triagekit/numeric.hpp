#pragma once

#include <optional>
#include <string>

namespace triagekit {

/// Round a non-negative value half-up to two decimals (20.825 -> 20.83).
/// This is the display rounding used for every percentage the toolkit
/// reports; half-even bankers' rounding would print 20.82 instead.
double round_half_up_2(double x);

/// Format a non-negative value rounded half-up to exactly two decimals
/// ("88" -> "88.00", "65.263..." -> "65.26").
std::string format_fixed_2(double x);

/// 100 * numerator / denominator, rounded half-up to two decimals.
/// Empty when the denominator is zero (undefined, reported as NA).
std::optional<double> percent_2(std::size_t numerator, std::size_t denominator);

/// Shortest decimal string that parses back to exactly the same double
/// (std::to_chars round-trip form). Used everywhere a value is emitted
/// to text: rule files, CSV cells, SVG coordinates.
std::string format_double_shortest(double x);

}  // namespace triagekit
