#pragma once

#include <Eigen/Dense>
#include <utility>

#include "cdcd/model.hpp"
#include "cdcd/sgl_solver.hpp"

namespace cdcd {

struct VarConfig {
  double lambda_d = 0.0;
  int max_iters = 500;
  double tol = 1e-6;
  int step_halving_max = 20;
};

/// Fitted residuals eps_hat_{it}; column 1 is Y_{.,1} by the t = 1 convention.
struct ResidualMatrix {
  Eigen::MatrixXd eps_hat;  // n x p
};

/// eps_hat_{it} = y_{i1} for t = 1, else y_{it} - sum_{j<t} sum_k phi_{t,j,k} x_{ik} y_{ij}.
/// Row-wise this equals T(x_i) y_i.
ResidualMatrix compute_residuals(const Eigen::MatrixXd& y,
                                 const Eigen::MatrixXd& x,
                                 const PhiTensor& phi);

/// (1/2n) sum_{i,t} (eps_hat_{it}^2 - e^{eta_{it}})^2 + lambda_d sum_{k>=1} ||beta_{.,k}||_2.
double var_objective(const BetaMatrix& beta, const ResidualMatrix& residuals,
                     const Eigen::MatrixXd& x, const VarConfig& cfg);

/// MM gradient and majorizing curvature for coordinate (t, k):
///   g = (1/n) sum_i (e^eta - eps^2) e^eta x_{ik},
///   h* = (2/n) sum_i e^{2 eta} x_{ik}^2.
std::pair<double, double> mm_gradient_curvature(const BetaMatrix& beta,
                                                const ResidualMatrix& residuals,
                                                const Eigen::MatrixXd& x, int t,
                                                int k);

/// Blockwise MM descent over k = 0..q with group soft-scaling for k >= 1 and
/// step halving to keep the penalized objective monotone.
std::pair<BetaMatrix, FitDiagnostics> fit_variance(
    const ResidualMatrix& residuals, const Eigen::MatrixXd& x,
    const VarConfig& cfg, const BetaMatrix* warm_start = nullptr);

/// Group KKT residual of a solution under cfg.lambda_d.
double variance_kkt_residual(const BetaMatrix& beta,
                             const ResidualMatrix& residuals,
                             const Eigen::MatrixXd& x, const VarConfig& cfg);

/// Largest group gradient norm at the intercept-only solution; the smallest
/// lambda_d that keeps every covariate block at zero.
double lambda_d_max(const ResidualMatrix& residuals, const Eigen::MatrixXd& x);

}  // namespace cdcd
