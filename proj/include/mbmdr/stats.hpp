#pragma once

#include <cmath>
#include <cstdint>

#include <boost/math/special_functions/gamma.hpp>

#include "mbmdr/error.hpp"

namespace mbmdr {

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  int direction = 0;  // sign of (cell case rate - rest case rate)

  bool degenerate() const { return direction == 0 && statistic == 0.0 && p_value == 1.0; }
};

/// Upper tail of the chi-square distribution, Q(df/2, x/2).
inline double chisq_sf(double x, int df) {
  if (!(x >= 0.0) || df < 1) throw ContractError("chisq_sf: need x >= 0 and df >= 1");
  if (x == 0.0) return 1.0;
  if (df == 1) return std::erfc(std::sqrt(0.5 * x));
  if (df == 2) return std::exp(-0.5 * x);
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

/// Pearson chi-square (1 df, no continuity correction) of
///
///             case  control
///     cell     a      b
///     rest     c      d
///
/// Any empty row or column gives the degenerate result (0, 1, 0).
inline TestResult two_by_two_chisq(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d) {
  if (a < 0 || b < 0 || c < 0 || d < 0) throw ContractError("two_by_two_chisq: negative count");
  const std::int64_t r1 = a + b, r2 = c + d, c1 = a + c, c2 = b + d;
  if (r1 == 0 || r2 == 0 || c1 == 0 || c2 == 0) return {};
  const std::int64_t n = r1 + r2;
  // Sign of a/r1 - c/r2 without rounding.
  const std::int64_t cross = a * d - b * c;
  if (cross == 0) return {0.0, 1.0, 0};
  const double diff = static_cast<double>(cross);
  // Row and column products are formed pairwise so that swapping rows or
  // columns reproduces the statistic bit for bit.
  const double rows = static_cast<double>(r1) * static_cast<double>(r2);
  const double cols = static_cast<double>(c1) * static_cast<double>(c2);
  const double stat = static_cast<double>(n) * diff * diff / (rows * cols);
  return {stat, chisq_sf(stat, 1), cross > 0 ? 1 : -1};
}

}  // namespace mbmdr
