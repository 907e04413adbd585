#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "cdcd/model.hpp"

namespace cdcd {

struct SglConfig {
  double lambda = 0.0;
  double lambda_g = 0.0;
  int max_sweeps = 500;
  double tol = 1e-6;             // relative objective change over a full cycle
  double kkt_tol = 1e-4;         // stationarity residual required to certify
  int active_set_refresh = 10;   // inner active-set cycles between full sweeps
};

struct FitDiagnostics {
  int sweeps_run = 0;
  std::vector<double> objective_trace;
  bool converged = false;
  double kkt_violation = 0.0;
  bool degenerate_column = false;
};

/// Precomputed interaction regressors for the Cholesky-factor objective.
///
/// z(k) holds Y_{.,1:(p-1)} with every column multiplied elementwise by
/// X_{.,k}; z(0) uses the all-ones column. Column sums of squares divided
/// by n are cached for the coordinate updates.
class InteractionDesign {
 public:
  // y is the demeaned n x p response matrix, x the n x q covariate matrix.
  InteractionDesign(const Eigen::MatrixXd& y, const Eigen::MatrixXd& x);

  int n() const { return n_; }
  int p() const { return p_; }
  int q() const { return q_; }

  const Eigen::MatrixXd& y_resp() const { return y_resp_; }  // n x (p-1)
  const Eigen::MatrixXd& z(int k) const { return z_[k]; }    // n x (p-1)
  const Eigen::MatrixXd& x_aug() const { return x_aug_; }    // n x (q+1)

  // ||z(k) column j0||_2^2 / n, j0 = j-1.
  double col_norm(int k, int j0) const { return col_norms_[k](j0); }

 private:
  int n_ = 0, p_ = 0, q_ = 0;
  Eigen::MatrixXd y_resp_;
  Eigen::MatrixXd x_aug_;
  std::vector<Eigen::MatrixXd> z_;
  std::vector<Eigen::VectorXd> col_norms_;
};

inline double soft_threshold(double a, double lambda) {
  const double mag = std::abs(a) - lambda;
  return mag > 0.0 ? (a > 0.0 ? mag : -mag) : 0.0;
}

/// Penalized least-squares objective:
/// (1/2n)||Y_resp - sum_k z(k) Phi_k||_F^2 + lambda sum_k ||Phi_k||_1
///   + lambda_g sum_{k>=1} ||Phi_k||_F.
double objective(const PhiTensor& phi, const InteractionDesign& design,
                 const SglConfig& cfg);

/// KKT zero condition for group k >= 1: the l2 norm of the soft-thresholded,
/// triangularly masked gradient block z(k)' R_k / n is <= lambda_g.
/// partial_residual excludes group k's contribution.
bool group_zero_check(int k, const Eigen::MatrixXd& partial_residual,
                      const InteractionDesign& design, const SglConfig& cfg);

/// Single-coordinate minimizer for phi_{t,j,k}. partial_residual excludes
/// the coordinate's own contribution. phi_k_frobenius is ||Phi_k||_F and
/// must be positive when k >= 1.
double update_entry(int t, int j, int k, const Eigen::VectorXd& partial_residual,
                    const InteractionDesign& design, double phi_k_frobenius,
                    const SglConfig& cfg);

/// Blockwise coordinate descent over groups k = 0..q (lasso updates for
/// k = 0, group zero check + sparse-group updates for k >= 1).
std::pair<PhiTensor, FitDiagnostics> fit_cholesky(
    const InteractionDesign& design, const SglConfig& cfg,
    const PhiTensor* warm_start = nullptr);

/// Maximum stationarity residual of a solution; the certificate checked at
/// convergence (thresholded-gradient norm for zero groups, subgradient
/// stationarity for active coordinates).
double kkt_residual(const PhiTensor& phi, const InteractionDesign& design,
                    const SglConfig& cfg);

/// (lambda_max_elem, lambda_g_max): the smallest penalties that zero every
/// entry at lambda_g = 0, resp. every group k >= 1 at lambda = 0.
std::pair<double, double> lambda_max(const InteractionDesign& design);

}  // namespace cdcd
