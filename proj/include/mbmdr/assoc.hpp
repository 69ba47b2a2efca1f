#pragma once

// Cell-vs-rest association tests adjusted for the codominant main effects of
// the features that span the cell grid.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <spdlog/spdlog.h>

#include "mbmdr/error.hpp"
#include "mbmdr/logistic.hpp"
#include "mbmdr/stats.hpp"

namespace mbmdr {

inline IrlsOptions adjustment_irls_options() {
  IrlsOptions o;
  o.max_iter = 25;
  o.tol = 1e-8;
  o.clamp = 15.0;
  return o;
}

/// Likelihood-ratio tests on one cell grid. The reduced model (intercept +
/// one indicator per non-reference level of every feature) is fitted once;
/// each cell test adds that cell's membership indicator.
///
/// Works on grouped counts: with categorical covariates the binomial
/// likelihood over cells equals the per-sample Bernoulli likelihood.
class CodominantAdjuster {
 public:
  /// `radices` are the level counts of the tuple's features; `cases` and
  /// `controls` are per-cell counts in mixed-radix order (last feature fastest).
  CodominantAdjuster(std::span<const int> radices, std::span<const std::int64_t> cases,
                     std::span<const std::int64_t> controls)
      : opts_(adjustment_irls_options()) {
    if (radices.size() < 2) throw ContractError("codominant adjustment needs at least two features");
    const std::size_t d = radices.size();
    std::size_t total_cells = 1;
    for (int r : radices) total_cells *= static_cast<std::size_t>(r);
    if (cases.size() != total_cells || controls.size() != total_cells)
      throw ContractError("cell count arrays do not match the grid");

    // Observed levels per feature among non-empty cells; the lowest observed
    // level is the reference.
    std::vector<std::vector<bool>> seen(d);
    for (std::size_t k = 0; k < d; ++k) seen[k].assign(static_cast<std::size_t>(radices[k]), false);
    std::vector<std::vector<int>> digits;
    for (std::size_t m = 0; m < total_cells; ++m) {
      if (cases[m] + controls[m] == 0) continue;
      std::vector<int> g(d);
      std::size_t rest = m;
      for (std::size_t k = d; k-- > 0;) {
        g[k] = static_cast<int>(rest % static_cast<std::size_t>(radices[k]));
        rest /= static_cast<std::size_t>(radices[k]);
      }
      for (std::size_t k = 0; k < d; ++k) seen[k][static_cast<std::size_t>(g[k])] = true;
      group_cell_.push_back(m);
      digits.push_back(std::move(g));
      trials_.push_back(static_cast<double>(cases[m] + controls[m]));
      successes_.push_back(static_cast<double>(cases[m]));
    }
    cell_group_.assign(total_cells, -1);
    for (std::size_t gi = 0; gi < group_cell_.size(); ++gi) cell_group_[group_cell_[gi]] = static_cast<int>(gi);

    std::vector<std::pair<std::size_t, int>> columns;  // (feature, level)
    for (std::size_t k = 0; k < d; ++k) {
      bool reference_taken = false;
      for (int lv = 0; lv < radices[k]; ++lv) {
        if (!seen[k][static_cast<std::size_t>(lv)]) continue;
        if (!reference_taken) {
          reference_taken = true;
          continue;
        }
        columns.emplace_back(k, lv);
      }
    }
    const auto groups = static_cast<Eigen::Index>(group_cell_.size());
    design_.setZero(groups, static_cast<Eigen::Index>(columns.size()) + 2);
    for (Eigen::Index gi = 0; gi < groups; ++gi) {
      design_(gi, 0) = 1.0;
      for (std::size_t c = 0; c < columns.size(); ++c)
        if (digits[static_cast<std::size_t>(gi)][columns[c].first] == columns[c].second)
          design_(gi, static_cast<Eigen::Index>(c) + 1) = 1.0;
    }
    if (groups > 0) {
      reduced_ = fit_grouped_logistic(design_.leftCols(design_.cols() - 1), trials_, successes_, opts_);
      if (!reduced_.converged) spdlog::debug("codominant adjustment: reduced model did not converge");
    }
  }

  /// 1-df LRT of membership in `cell` against the reduced model.
  TestResult test(std::size_t cell) const {
    if (cell >= cell_group_.size()) throw ContractError("cell index out of range");
    const int gi = cell_group_[cell];
    if (gi < 0 || group_cell_.size() < 2 || !reduced_.converged) return {};
    const Eigen::Index p = design_.cols();
    Eigen::MatrixXd x = design_;
    x(gi, p - 1) = 1.0;
    Eigen::VectorXd start(p);
    start << reduced_.beta, 0.0;
    const auto full = fit_grouped_logistic(x, trials_, successes_, opts_, &start);
    if (!full.converged) {
      spdlog::debug("codominant adjustment: full model for cell {} did not converge", cell);
      return {};
    }
    const double stat = 2.0 * (full.loglik - reduced_.loglik);
    if (!(stat > 1e-10)) return {};
    const double coef = full.beta[p - 1];
    if (coef == 0.0) return {};
    return {stat, chisq_sf(stat, 1), coef > 0.0 ? 1 : -1};
  }

 private:
  IrlsOptions opts_;
  std::vector<std::size_t> group_cell_;
  std::vector<int> cell_group_;
  std::vector<double> trials_, successes_;
  Eigen::MatrixXd design_;  // last column (membership) left zero
  IrlsFit reduced_;
};

}  // namespace mbmdr
