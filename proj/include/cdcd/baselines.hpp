#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>

namespace cdcd {

struct BaselineEstimate {
  Eigen::MatrixXd sigma;
  std::string method;
  std::optional<double> threshold;
};

/// Sample covariance S = Y' Y / n of a demeaned response matrix.
BaselineEstimate dense_sample(const Eigen::MatrixXd& y_demeaned);

/// Soft-threshold the off-diagonal of S at lambda; diagonal untouched.
BaselineEstimate sparse_sample(const Eigen::MatrixXd& y_demeaned, double lambda);

/// Threshold selected by L-fold CV minimizing held-out Frobenius distance
/// between the thresholded train estimate and the validation sample covariance.
BaselineEstimate sparse_sample_cv(const Eigen::MatrixXd& y_demeaned,
                                  int folds = 5, std::uint64_t seed = 0,
                                  int n_lambda = 20);

/// Inverse of a baseline Sigma for precision-error comparisons; empty when
/// the estimate is numerically singular (e.g. DenseSample at n <= p).
std::optional<Eigen::MatrixXd> baseline_precision(const Eigen::MatrixXd& sigma);

}  // namespace cdcd
