#include "cdcd/metrics.hpp"

#include <set>
#include <stdexcept>

namespace cdcd {

namespace {

double average_frobenius(const std::vector<Eigen::MatrixXd>& estimates,
                         const std::vector<Eigen::MatrixXd>& truth) {
  if (estimates.size() != truth.size() || estimates.empty())
    throw std::invalid_argument("metrics: subject count mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    if (estimates[i].rows() != truth[i].rows() ||
        estimates[i].cols() != truth[i].cols())
      throw std::invalid_argument("metrics: matrix dimension mismatch");
    total += (estimates[i] - truth[i]).norm();
  }
  return total / static_cast<double>(estimates.size());
}

}  // namespace

double sigma_error(const std::vector<Eigen::MatrixXd>& estimates,
                   const std::vector<Eigen::MatrixXd>& truth) {
  return average_frobenius(estimates, truth);
}

double precision_error(const std::vector<Eigen::MatrixXd>& estimates,
                       const std::vector<Eigen::MatrixXd>& truth) {
  return average_frobenius(estimates, truth);
}

double phi_l2_error(const PhiTensor& fitted, const PhiTensor& truth) {
  if (!fitted.same_shape(truth))
    throw std::invalid_argument("phi_l2_error: shape mismatch");
  double total = 0.0;
  for (int k = 0; k <= fitted.q(); ++k)
    total += (fitted.slice(k) - truth.slice(k)).squaredNorm();
  return total;
}

SupportRates support_rates(const PhiTensor& fitted,
                           const std::vector<PhiIndex>& true_support,
                           bool include_k0_in_fpr) {
  std::set<std::tuple<int, int, int>> truth;
  for (const PhiIndex& idx : true_support) truth.insert({idx.t, idx.j, idx.k});

  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t negatives = 0;
  for (int k = 0; k <= fitted.q(); ++k) {
    if (k == 0 && !include_k0_in_fpr) {
      // k = 0 still counts toward TPR when the truth names it.
      for (int t = 2; t <= fitted.p(); ++t)
        for (int j = 1; j < t; ++j)
          if (truth.count({t, j, k}) && fitted(t, j, k) != 0.0) ++true_positives;
      continue;
    }
    for (int t = 2; t <= fitted.p(); ++t)
      for (int j = 1; j < t; ++j) {
        const bool is_true = truth.count({t, j, k}) > 0;
        const bool is_nonzero = fitted(t, j, k) != 0.0;
        if (is_true) {
          if (is_nonzero) ++true_positives;
        } else {
          ++negatives;
          if (is_nonzero) ++false_positives;
        }
      }
  }

  SupportRates rates;
  if (!truth.empty())
    rates.tpr = static_cast<double>(true_positives) /
                static_cast<double>(truth.size());
  rates.fpr = negatives > 0 ? static_cast<double>(false_positives) /
                                  static_cast<double>(negatives)
                            : 0.0;
  return rates;
}

}  // namespace cdcd
