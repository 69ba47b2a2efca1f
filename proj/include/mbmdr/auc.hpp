#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "mbmdr/error.hpp"

namespace mbmdr {

/// Area under the ROC curve as the Mann-Whitney probability that a case
/// outscores a control, ties counting one half. Computed from mid-ranks.
inline double auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw ContractError("auc: scores and labels differ in length");
  std::size_t n1 = 0;
  for (auto y : labels) {
    if (y > 1) throw ContractError("auc: labels must be 0 or 1");
    n1 += y;
  }
  const std::size_t n0 = labels.size() - n1;
  if (n1 == 0 || n0 == 0) throw ValidationError("auc undefined: labels contain a single class");
  for (double s : scores)
    if (!std::isfinite(s)) throw ContractError("auc: scores must be finite");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Twice the rank sum keeps mid-ranks integral.
  std::uint64_t twice_rank_sum = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const std::uint64_t twice_mid = i + 1 + j;  // (i+1) + j = 2 * mid-rank
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]]) twice_rank_sum += twice_mid;
    i = j;
  }
  const double u = static_cast<double>(twice_rank_sum) / 2.0 - static_cast<double>(n1) * (n1 + 1) / 2.0;
  return u / (static_cast<double>(n1) * static_cast<double>(n0));
}

}  // namespace mbmdr
