#pragma once

// Newton/IRLS for binomial logistic regression on grouped data. Individual
// level data is the special case of one trial per row.

#include <algorithm>
#include <cmath>
#include <span>

#include <Eigen/Dense>

#include "mbmdr/error.hpp"
#include "mbmdr/link.hpp"

namespace mbmdr {

struct IrlsOptions {
  int max_iter = 25;
  double tol = 1e-8;          // on max |beta_new - beta_old|
  double clamp = 0.0;         // |beta| bound, 0 disables
  double l2 = 0.0;            // ridge on every coefficient except column 0
};

struct IrlsFit {
  Eigen::VectorXd beta;
  double loglik = 0.0;        // unpenalized
  int iterations = 0;
  bool converged = false;
};

namespace detail {

inline double binomial_loglik(const Eigen::MatrixXd& x, std::span<const double> trials,
                              std::span<const double> successes, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = x * beta;
  double ll = 0.0;
  for (Eigen::Index g = 0; g < eta.size(); ++g)
    ll += successes[g] * eta[g] - trials[g] * log1pexp(eta[g]);
  return ll;
}

}  // namespace detail

/// Maximizes sum_g [y_g eta_g - n_g log(1 + exp eta_g)] - l2/2 |beta_{1..}|^2.
///
/// Steps are halved while the penalized objective decreases. With `clamp`
/// set, coefficients are projected onto [-clamp, clamp] after every step,
/// which keeps separated designs finite; convergence is then judged on the
/// projected change.
inline IrlsFit fit_grouped_logistic(const Eigen::MatrixXd& x, std::span<const double> trials,
                                    std::span<const double> successes, const IrlsOptions& opts,
                                    const Eigen::VectorXd* start = nullptr) {
  const Eigen::Index groups = x.rows(), p = x.cols();
  if (static_cast<Eigen::Index>(trials.size()) != groups ||
      static_cast<Eigen::Index>(successes.size()) != groups)
    throw ContractError("fit_grouped_logistic: size mismatch");

  IrlsFit fit;
  fit.beta = start ? *start : Eigen::VectorXd::Zero(p);
  const auto penalty = [&](const Eigen::VectorXd& b) {
    return opts.l2 > 0.0 ? 0.5 * opts.l2 * b.tail(p - 1).squaredNorm() : 0.0;
  };
  const auto project = [&](Eigen::VectorXd& b) {
    if (opts.clamp > 0.0) b = b.cwiseMax(-opts.clamp).cwiseMin(opts.clamp);
  };
  project(fit.beta);
  double objective = detail::binomial_loglik(x, trials, successes, fit.beta) - penalty(fit.beta);

  Eigen::VectorXd w(groups), resid(groups);
  Eigen::MatrixXd info(p, p);
  for (fit.iterations = 1; fit.iterations <= opts.max_iter; ++fit.iterations) {
    const Eigen::VectorXd eta = x * fit.beta;
    for (Eigen::Index g = 0; g < groups; ++g) {
      const double mu = expit(eta[g]);
      w[g] = trials[g] * mu * (1.0 - mu);
      resid[g] = successes[g] - trials[g] * mu;
    }
    Eigen::VectorXd score = x.transpose() * resid;
    info.noalias() = x.transpose() * (x.array().colwise() * w.array()).matrix();
    if (opts.l2 > 0.0) {
      score.tail(p - 1) -= opts.l2 * fit.beta.tail(p - 1);
      info.diagonal().tail(p - 1).array() += opts.l2;
    }
    // A vanishing ridge keeps rank-deficient designs (aliased indicator
    // columns, empty levels) solvable without changing the fitted values.
    info.diagonal().array() += 1e-10 * (1.0 + info.diagonal().array().abs());
    Eigen::VectorXd step = info.ldlt().solve(score);
    if (!step.allFinite()) break;

    Eigen::VectorXd next = fit.beta + step;
    project(next);
    double next_obj = detail::binomial_loglik(x, trials, successes, next) - penalty(next);
    for (int halving = 0; halving < 30 && next_obj < objective - 1e-12 * (1.0 + std::abs(objective));
         ++halving) {
      step *= 0.5;
      next = fit.beta + step;
      project(next);
      next_obj = detail::binomial_loglik(x, trials, successes, next) - penalty(next);
    }
    const double change = (next - fit.beta).cwiseAbs().maxCoeff();
    fit.beta = std::move(next);
    objective = next_obj;
    if (change < opts.tol) {
      fit.converged = true;
      break;
    }
  }
  fit.iterations = std::min(fit.iterations, opts.max_iter);
  fit.loglik = detail::binomial_loglik(x, trials, successes, fit.beta);
  return fit;
}

}  // namespace mbmdr
