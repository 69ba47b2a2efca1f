#pragma once

#include <cmath>

#include "mbmdr/error.hpp"

namespace mbmdr {

inline double expit(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ContractError("logit: argument must lie strictly inside (0,1)");
  return std::log(p / (1.0 - p));
}

// log(1 + exp(z)) without overflow.
inline double log1pexp(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

}  // namespace mbmdr
