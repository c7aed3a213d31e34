#include "triagekit/numeric.hpp"

#include <cassert>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace triagekit {

double round_half_up_2(double x) {
  assert(x >= 0.0);
  return std::floor(x * 100.0 + 0.5) / 100.0;
}

std::string format_fixed_2(double x) {
  assert(x >= 0.0);
  const auto cents = static_cast<long long>(std::floor(x * 100.0 + 0.5));
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%lld.%02lld", cents / 100, cents % 100);
  return buf;
}

std::optional<double> percent_2(std::size_t numerator, std::size_t denominator) {
  if (denominator == 0) return std::nullopt;
  return round_half_up_2(100.0 * static_cast<double>(numerator) / static_cast<double>(denominator));
}

std::string format_double_shortest(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  assert(ec == std::errc{});
  return std::string(buf, ptr);
}

}  // namespace triagekit
