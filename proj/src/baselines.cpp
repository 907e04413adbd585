#include "cdcd/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "cdcd/sgl_solver.hpp"
#include "cdcd/tuning.hpp"

namespace cdcd {

BaselineEstimate dense_sample(const Eigen::MatrixXd& y_demeaned) {
  if (y_demeaned.rows() < 1)
    throw std::invalid_argument("dense_sample: empty response matrix");
  Eigen::MatrixXd s = y_demeaned.transpose() * y_demeaned /
                      static_cast<double>(y_demeaned.rows());
  return {0.5 * (s + s.transpose()), "dense-sample", std::nullopt};
}

BaselineEstimate sparse_sample(const Eigen::MatrixXd& y_demeaned, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("sparse_sample: lambda must be >= 0");
  BaselineEstimate est = dense_sample(y_demeaned);
  const int p = static_cast<int>(est.sigma.rows());
  for (int j = 0; j < p; ++j)
    for (int k = 0; k < p; ++k)
      if (j != k) est.sigma(j, k) = soft_threshold(est.sigma(j, k), lambda);
  est.method = "sparse-sample";
  est.threshold = lambda;
  return est;
}

BaselineEstimate sparse_sample_cv(const Eigen::MatrixXd& y_demeaned, int folds,
                                  std::uint64_t seed, int n_lambda) {
  const int n = static_cast<int>(y_demeaned.rows());
  const auto assignment = make_folds(n, folds, seed);

  double max_offdiag = 0.0;
  {
    const Eigen::MatrixXd s = dense_sample(y_demeaned).sigma;
    for (int j = 0; j < s.rows(); ++j)
      for (int k = 0; k < s.cols(); ++k)
        if (j != k) max_offdiag = std::max(max_offdiag, std::abs(s(j, k)));
  }
  std::vector<double> lambdas(n_lambda);
  for (int l = 0; l < n_lambda; ++l)
    lambdas[l] = max_offdiag * l / static_cast<double>(n_lambda - 1);

  std::vector<double> loss(lambdas.size(), 0.0);
  for (int fold = 0; fold < folds; ++fold) {
    std::vector<int> train_rows, val_rows;
    for (int i = 0; i < n; ++i)
      (assignment[i] == fold ? val_rows : train_rows).push_back(i);
    Eigen::MatrixXd y_train(train_rows.size(), y_demeaned.cols());
    Eigen::MatrixXd y_val(val_rows.size(), y_demeaned.cols());
    for (std::size_t i = 0; i < train_rows.size(); ++i)
      y_train.row(i) = y_demeaned.row(train_rows[i]);
    for (std::size_t i = 0; i < val_rows.size(); ++i)
      y_val.row(i) = y_demeaned.row(val_rows[i]);

    const Eigen::MatrixXd s_val = dense_sample(y_val).sigma;
    for (std::size_t l = 0; l < lambdas.size(); ++l) {
      const Eigen::MatrixXd s_train = sparse_sample(y_train, lambdas[l]).sigma;
      loss[l] += (s_train - s_val).squaredNorm();
    }
  }

  std::size_t best = 0;
  for (std::size_t l = 1; l < lambdas.size(); ++l)
    if (loss[l] < loss[best]) best = l;
  return sparse_sample(y_demeaned, lambdas[best]);
}

std::optional<Eigen::MatrixXd> baseline_precision(const Eigen::MatrixXd& sigma) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(sigma);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return std::nullopt;
  const double rcond =
      ldlt.vectorD().minCoeff() / std::max(ldlt.vectorD().maxCoeff(), 1e-300);
  if (!(rcond > 1e-12)) return std::nullopt;
  Eigen::MatrixXd inv =
      ldlt.solve(Eigen::MatrixXd::Identity(sigma.rows(), sigma.cols()));
  return 0.5 * (inv + inv.transpose());
}

}  // namespace cdcd
