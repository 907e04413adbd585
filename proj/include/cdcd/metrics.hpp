#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "cdcd/model.hpp"
#include "cdcd/simgen.hpp"

namespace cdcd {

/// Average Frobenius error n^{-1} sum_i ||est_i - truth_i||_F.
double sigma_error(const std::vector<Eigen::MatrixXd>& estimates,
                   const std::vector<Eigen::MatrixXd>& truth);

/// Same contract for precision matrices.
double precision_error(const std::vector<Eigen::MatrixXd>& estimates,
                       const std::vector<Eigen::MatrixXd>& truth);

/// Squared l2 norm of the coefficient difference over all (t,j,k).
double phi_l2_error(const PhiTensor& fitted, const PhiTensor& truth);

struct SupportRates {
  std::optional<double> tpr;  // undefined when the true support is empty
  double fpr = 0.0;
};

/// Nonzero defined as exactly |phi| > 0. The FPR denominator covers all
/// p(p-1)/2 (q+1) coordinates minus the true support (k = 0 slice included,
/// configurable).
SupportRates support_rates(const PhiTensor& fitted,
                           const std::vector<PhiIndex>& true_support,
                           bool include_k0_in_fpr = true);

}  // namespace cdcd
