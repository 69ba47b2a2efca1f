#pragma once

// Main-effects ridge logistic regression on additively coded genotypes.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mbmdr/auc.hpp"
#include "mbmdr/dataset.hpp"
#include "mbmdr/engine.hpp"
#include "mbmdr/error.hpp"
#include "mbmdr/link.hpp"
#include "mbmdr/logistic.hpp"
#include "mbmdr/random.hpp"

namespace mbmdr {

struct LogisticModel {
  double intercept = 0.0;
  std::vector<double> coefficients;
  double l2_penalty = 0.0;
};

class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, LogisticModel last) : Error(what), last_(std::move(last)) {}
  const LogisticModel& last_iterate() const { return last_; }

 private:
  LogisticModel last_;
};

inline Eigen::MatrixXd additive_design(const GenotypeDataset& ds) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(ds.n()), static_cast<Eigen::Index>(ds.q() + 1));
  x.col(0).setOnes();
  for (std::size_t j = 0; j < ds.q(); ++j) {
    const auto col = ds.column(j);
    for (std::size_t i = 0; i < ds.n(); ++i) {
      if (col[i] == kMissing) throw ValidationError("logistic baseline needs complete data; '" +
                                                    std::string(ds.feature_names()[j]) + "' has missing values");
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j + 1)) = col[i];
    }
  }
  return x;
}

/// Ridge-penalized IRLS; the intercept is not penalized. Stops once the
/// largest coefficient change drops below 1e-8, or fails after 100 steps.
inline LogisticModel fit_logistic(const GenotypeDataset& ds, double l2) {
  if (!(l2 >= 0.0) || !std::isfinite(l2)) throw ValidationError("l2 penalty must be a finite non-negative number");
  const auto x = additive_design(ds);
  const std::vector<double> trials(ds.n(), 1.0);
  std::vector<double> y(ds.phenotype().begin(), ds.phenotype().end());
  IrlsOptions opts;
  opts.max_iter = 100;
  opts.tol = 1e-8;
  opts.l2 = l2;
  const auto fit = fit_grouped_logistic(x, trials, y, opts);
  LogisticModel m;
  m.intercept = fit.beta[0];
  m.coefficients.assign(fit.beta.data() + 1, fit.beta.data() + fit.beta.size());
  m.l2_penalty = l2;
  if (!fit.converged || !fit.beta.allFinite())
    throw NonConvergenceError("logistic fit did not converge in 100 iterations (l2=" + std::to_string(l2) + ")",
                              std::move(m));
  return m;
}

inline double predict_logistic(const LogisticModel& m, std::span<const Level> x) {
  if (x.size() != m.coefficients.size()) throw ValidationError("logistic model: feature count mismatch");
  double eta = m.intercept;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] == kMissing) throw ValidationError("logistic model: missing genotype");
    eta += m.coefficients[j] * x[j];
  }
  return expit(eta);
}

inline std::vector<double> predict_logistic_all(const LogisticModel& m, const GenotypeDataset& ds) {
  std::vector<double> out(ds.n());
  for (std::size_t i = 0; i < ds.n(); ++i) out[i] = predict_logistic(m, ds.row(i));
  return out;
}

struct PenaltySelection {
  double l2 = 0.0;
  double cv_auc = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> grid;
  std::vector<double> mean_auc;  // NaN where some fold failed
};

inline const std::vector<double>& default_l2_grid() {
  static const std::vector<double> grid{0.0, 0.01, 0.1, 1.0, 10.0};
  return grid;
}

/// k-fold CV over the penalty grid; ties go to the earlier grid entry.
inline PenaltySelection select_l2(const GenotypeDataset& ds, int k, std::uint64_t seed,
                                  const std::vector<double>& grid = default_l2_grid(), int threads = 0) {
  if (grid.empty()) throw ValidationError("empty penalty grid");
  const auto folds = stratified_kfold(ds, k, derive_seed(seed, 1));
  std::vector<GenotypeDataset> train, test;
  for (int f = 0; f < k; ++f) {
    train.push_back(ds.subset(folds.complement(f)));
    test.push_back(ds.subset(folds.members(f)));
  }
  const std::size_t kk = static_cast<std::size_t>(k);
  std::vector<double> fold_auc(grid.size() * kk, std::numeric_limits<double>::quiet_NaN());
  parallel_indices(fold_auc.size(), threads, [&](std::size_t job) {
    const auto g = job / kk, f = job % kk;
    try {
      const auto m = fit_logistic(train[f], grid[g]);
      fold_auc[job] = auc(predict_logistic_all(m, test[f]), test[f].phenotype());
    } catch (const Error&) {
    }
  });
  PenaltySelection sel;
  sel.grid = grid;
  std::optional<std::size_t> best;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double sum = 0.0;
    for (std::size_t f = 0; f < kk; ++f) sum += fold_auc[g * kk + f];
    sel.mean_auc.push_back(sum / static_cast<double>(k));
    if (!std::isnan(sel.mean_auc.back()) && (!best || sel.mean_auc.back() > sel.mean_auc[*best])) best = g;
  }
  if (!best) throw ValidationError("no penalty in the grid produced a converged logistic fit");
  sel.l2 = grid[*best];
  sel.cv_auc = sel.mean_auc[*best];
  return sel;
}

}  // namespace mbmdr
