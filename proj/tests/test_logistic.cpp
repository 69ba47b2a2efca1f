#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "mbmdr/link.hpp"
#include "mbmdr/logistic.hpp"

using namespace mbmdr;

TEST(GroupedLogistic, SaturatedModelRecoversGroupLogits) {
  // One indicator per group: fitted probabilities equal observed proportions.
  Eigen::MatrixXd x(3, 3);
  x << 1, 0, 0, 1, 1, 0, 1, 0, 1;
  const std::vector<double> trials{100, 80, 50}, succ{30, 60, 25};
  IrlsOptions opts;
  const auto fit = fit_grouped_logistic(x, trials, succ, opts);
  ASSERT_TRUE(fit.converged);
  EXPECT_NEAR(fit.beta[0], logit(0.3), 1e-9);
  EXPECT_NEAR(fit.beta[0] + fit.beta[1], logit(0.75), 1e-9);
  EXPECT_NEAR(fit.beta[0] + fit.beta[2], logit(0.5), 1e-9);
}

TEST(GroupedLogistic, ClampKeepsSeparatedFitFinite) {
  Eigen::MatrixXd x(2, 2);
  x << 1, 0, 1, 1;
  const std::vector<double> trials{20, 20}, succ{10, 20};
  IrlsOptions opts;
  opts.clamp = 15;
  const auto fit = fit_grouped_logistic(x, trials, succ, opts);
  EXPECT_TRUE(fit.beta.allFinite());
  EXPECT_LE(fit.beta.cwiseAbs().maxCoeff(), 15.0);
  EXPECT_GT(fit.beta[1], 5.0);
}

TEST(GroupedLogistic, RidgeShrinksSlope) {
  Eigen::MatrixXd x(3, 2);
  x << 1, 0, 1, 1, 1, 2;
  const std::vector<double> trials{50, 50, 50}, succ{10, 25, 40};
  double prev = 1e9;
  for (double l2 : {0.0, 1.0, 10.0, 100.0}) {
    IrlsOptions opts;
    opts.l2 = l2;
    opts.max_iter = 100;
    const auto fit = fit_grouped_logistic(x, trials, succ, opts);
    ASSERT_TRUE(fit.converged);
    EXPECT_LE(std::abs(fit.beta[1]), prev);
    prev = std::abs(fit.beta[1]);
  }
}

TEST(GroupedLogistic, SizeMismatchRejected) {
  Eigen::MatrixXd x(2, 1);
  x << 1, 1;
  const std::vector<double> trials{1}, succ{1};
  EXPECT_THROW(fit_grouped_logistic(x, trials, succ, IrlsOptions{}), ContractError);
}
