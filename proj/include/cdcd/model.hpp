#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cdcd {

/// Coefficient tensor for the covariate-dependent Cholesky factor.
///
/// Stores phi_{t,j,k} for t in {2..p}, j in {1..t-1}, k in {0..q}, where
/// k = 0 is the population (intercept) slice. Each slice k is kept as a
/// (p-1) x (p-1) matrix whose (j-1, t-2) entry is phi_{t,j,k}; only the
/// region j <= t-1 is addressable, the rest stays zero.
class PhiTensor {
 public:
  PhiTensor() = default;
  PhiTensor(int p, int q);

  int p() const { return p_; }
  int q() const { return q_; }

  // 1-based statistical indexing: t in [2,p], j in [1,t-1], k in [0,q].
  double operator()(int t, int j, int k) const;
  void set(int t, int j, int k, double value);

  // Slice k as a (p-1) x (p-1) matrix, entry (j-1, t-2).
  const Eigen::MatrixXd& slice(int k) const;
  Eigen::MatrixXd& slice(int k);

  std::size_t coefficient_count() const;  // p(p-1)/2 * (q+1)
  std::size_t support_size() const;       // exact nonzeros
  double squared_norm() const;
  bool same_shape(const PhiTensor& other) const;

  void set_zero();

 private:
  void check_index(int t, int j, int k) const;

  int p_ = 0;
  int q_ = 0;
  std::vector<Eigen::MatrixXd> slices_;
};

/// Log-variance regression coefficients beta_{t,k}, t in [1,p], k in [0,q].
class BetaMatrix {
 public:
  BetaMatrix() = default;
  BetaMatrix(int p, int q) : entries_(Eigen::MatrixXd::Zero(p, q + 1)) {}
  explicit BetaMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {}

  int p() const { return static_cast<int>(entries_.rows()); }
  int q() const { return static_cast<int>(entries_.cols()) - 1; }

  double operator()(int t, int k) const { return entries_(t - 1, k); }
  void set(int t, int k, double value) { entries_(t - 1, k) = value; }

  const Eigen::MatrixXd& entries() const { return entries_; }
  Eigen::MatrixXd& entries() { return entries_; }

 private:
  Eigen::MatrixXd entries_;  // p x (q+1), column k holds beta_{.,k}
};

struct ModelInfo {
  double lambda = 0.0;
  double lambda_g = 0.0;
  double lambda_d = 0.0;
  bool cholesky_converged = true;
  bool variance_converged = true;
  int cholesky_sweeps = 0;
  int variance_iters = 0;
  double cholesky_kkt = 0.0;
  double variance_kkt = 0.0;
};

/// Optional input standardization recorded with a fitted model so that new
/// covariate vectors can be mapped onto the fitting scale.
struct Standardization {
  Eigen::VectorXd x_center;
  Eigen::VectorXd x_scale;
  Eigen::VectorXd y_scale;
};

/// The complete CDCD parameterization: Cholesky-factor coefficients,
/// log-variance coefficients and the empirical demeaning offsets.
struct CholeskyModel {
  PhiTensor phi;
  BetaMatrix beta;
  Eigen::VectorXd column_means;
  ModelInfo info;
  std::optional<Standardization> standardization;

  int p() const { return phi.p(); }
  int q() const { return phi.q(); }
};

/// Assembled per-subject covariance pair with its factor.
struct SubjectCov {
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd precision;
  Eigen::MatrixXd t_matrix;
  Eigen::VectorXd d_diag;
};

// Exponent clamp used before every exp() of a linear predictor.
inline constexpr double kExpClamp = 30.0;

/// T(x): unit lower triangular with (t,j) entry -(phi_{t,j,0} + sum_k phi_{t,j,k} x_k).
Eigen::MatrixXd build_T(const CholeskyModel& model, const Eigen::VectorXd& x);

/// D(x) diagonal: exp(beta_{t,0} + sum_k beta_{t,k} x_k), exponent clamped.
Eigen::VectorXd build_D(const CholeskyModel& model, const Eigen::VectorXd& x);

/// Precision = T' D^{-1} T exactly; sigma via two triangular solves against T.
SubjectCov assemble(const CholeskyModel& model, const Eigen::VectorXd& x);

/// Subtract the model's stored column means from a raw response matrix.
Eigen::MatrixXd predict_mean_adjust(const CholeskyModel& model,
                                    const Eigen::MatrixXd& y_raw);

/// Column means of Y (the fitting path stores these in the model).
Eigen::VectorXd column_means(const Eigen::MatrixXd& y);

}  // namespace cdcd
