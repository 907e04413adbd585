#include "cdcd/variance_solver.hpp"

#include <algorithm>
#include <cmath>

namespace cdcd {

namespace {

Eigen::MatrixXd augment_ones(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd x_aug(x.rows(), x.cols() + 1);
  x_aug.col(0).setOnes();
  if (x.cols() > 0) x_aug.rightCols(x.cols()) = x;
  return x_aug;
}

Eigen::MatrixXd clamped_exp(const Eigen::MatrixXd& eta) {
  return eta.array().min(kExpClamp).max(-kExpClamp).exp();
}

double smooth_loss(const Eigen::MatrixXd& eps2, const Eigen::MatrixXd& eta) {
  const Eigen::MatrixXd w = clamped_exp(eta);
  return (eps2 - w).squaredNorm() / (2.0 * eps2.rows());
}

double penalty(const Eigen::MatrixXd& beta, double lambda_d) {
  double value = 0.0;
  for (int k = 1; k < beta.cols(); ++k) value += beta.col(k).norm();
  return lambda_d * value;
}

// Gradient of the smooth loss with respect to the block beta_{.,k}.
Eigen::VectorXd block_gradient(const Eigen::MatrixXd& eps2,
                               const Eigen::MatrixXd& eta,
                               const Eigen::VectorXd& xk) {
  const Eigen::MatrixXd w = clamped_exp(eta);
  const Eigen::MatrixXd core = (w - eps2).cwiseProduct(w);
  return core.transpose() * xk / static_cast<double>(eps2.rows());
}

Eigen::VectorXd block_curvature(const Eigen::MatrixXd& eta,
                                const Eigen::VectorXd& xk) {
  const Eigen::MatrixXd w = clamped_exp(eta);
  const Eigen::MatrixXd w2 = w.cwiseProduct(w);
  return 2.0 * (w2.transpose() * xk.cwiseProduct(xk)) /
         static_cast<double>(eta.rows());
}

}  // namespace

ResidualMatrix compute_residuals(const Eigen::MatrixXd& y,
                                 const Eigen::MatrixXd& x,
                                 const PhiTensor& phi) {
  const int p = phi.p();
  const int q = phi.q();
  if (y.cols() != p || x.cols() != q || y.rows() != x.rows())
    throw std::invalid_argument("compute_residuals: dimension mismatch");

  const int n = static_cast<int>(y.rows());
  const Eigen::MatrixXd x_aug = augment_ones(x);
  const Eigen::MatrixXd y_lag = y.leftCols(p - 1);

  ResidualMatrix out;
  out.eps_hat.resize(n, p);
  out.eps_hat.col(0) = y.col(0);
  Eigen::MatrixXd fitted = Eigen::MatrixXd::Zero(n, p - 1);
  for (int k = 0; k <= q; ++k) {
    const Eigen::MatrixXd zk = y_lag.array().colwise() * x_aug.col(k).array();
    fitted.noalias() += zk * phi.slice(k);
  }
  out.eps_hat.rightCols(p - 1) = y.rightCols(p - 1) - fitted;
  return out;
}

double var_objective(const BetaMatrix& beta, const ResidualMatrix& residuals,
                     const Eigen::MatrixXd& x, const VarConfig& cfg) {
  const Eigen::MatrixXd x_aug = augment_ones(x);
  if (beta.p() != residuals.eps_hat.cols() || beta.q() + 1 != x_aug.cols() ||
      x_aug.rows() != residuals.eps_hat.rows())
    throw std::invalid_argument("var_objective: dimension mismatch");
  const Eigen::MatrixXd eps2 = residuals.eps_hat.cwiseAbs2();
  const Eigen::MatrixXd eta = x_aug * beta.entries().transpose();
  return smooth_loss(eps2, eta) + penalty(beta.entries(), cfg.lambda_d);
}

std::pair<double, double> mm_gradient_curvature(const BetaMatrix& beta,
                                                const ResidualMatrix& residuals,
                                                const Eigen::MatrixXd& x, int t,
                                                int k) {
  const Eigen::MatrixXd x_aug = augment_ones(x);
  const Eigen::MatrixXd eps2 = residuals.eps_hat.cwiseAbs2();
  const Eigen::MatrixXd eta = x_aug * beta.entries().transpose();
  const Eigen::VectorXd g = block_gradient(eps2, eta, x_aug.col(k));
  const Eigen::VectorXd h = block_curvature(eta, x_aug.col(k));
  return {g(t - 1), h(t - 1)};
}

std::pair<BetaMatrix, FitDiagnostics> fit_variance(const ResidualMatrix& residuals,
                                                   const Eigen::MatrixXd& x,
                                                   const VarConfig& cfg,
                                                   const BetaMatrix* warm_start) {
  if (cfg.lambda_d < 0.0 || cfg.max_iters < 1 || cfg.tol <= 0.0)
    throw std::invalid_argument("fit_variance: invalid configuration");
  if (!residuals.eps_hat.allFinite())
    throw std::invalid_argument("fit_variance: non-finite residuals");

  const int n = static_cast<int>(residuals.eps_hat.rows());
  const int p = static_cast<int>(residuals.eps_hat.cols());
  const int q = static_cast<int>(x.cols());
  if (x.rows() != n) throw std::invalid_argument("fit_variance: row mismatch");

  const Eigen::MatrixXd x_aug = augment_ones(x);
  const Eigen::MatrixXd eps2 = residuals.eps_hat.cwiseAbs2();

  Eigen::MatrixXd beta;
  if (warm_start) {
    beta = warm_start->entries();
  } else {
    beta = Eigen::MatrixXd::Zero(p, q + 1);
    beta.col(0) =
        (eps2.colwise().mean().array() + 1e-8).log().min(kExpClamp).max(-kExpClamp);
  }
  Eigen::MatrixXd eta = x_aug * beta.transpose();

  FitDiagnostics diag;
  double obj = smooth_loss(eps2, eta) + penalty(beta, cfg.lambda_d);
  diag.objective_trace.push_back(obj);

  const double kkt_target = 1e-4;
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    for (int k = 0; k <= q; ++k) {
      const Eigen::VectorXd& xk = x_aug.col(k);
      if (xk.squaredNorm() <= 0.0) continue;  // block frozen, no information
      const Eigen::VectorXd g = block_gradient(eps2, eta, xk);
      const Eigen::VectorXd h = block_curvature(eta, xk);

      Eigen::VectorXd proposal;
      if (k == 0) {
        proposal = beta.col(0);
        for (int t = 0; t < p; ++t)
          if (h(t) > 0.0) proposal(t) -= g(t) / h(t);
      } else {
        // Uniform block curvature so the fixed point satisfies the group
        // lasso stationarity condition.
        const double hk = h.maxCoeff();
        if (hk <= 0.0) continue;
        const Eigen::VectorXd v = beta.col(k) - g / hk;
        const double vn = v.norm();
        const double factor =
            vn > 0.0 ? std::max(1.0 - cfg.lambda_d / (hk * vn), 0.0) : 0.0;
        proposal = factor * v;
      }

      Eigen::VectorXd delta = proposal - beta.col(k);
      if (delta.squaredNorm() == 0.0) continue;

      Eigen::VectorXd old_col = beta.col(k);
      double trial_obj = 0.0;
      bool accepted = false;
      for (int halving = 0; halving <= cfg.step_halving_max; ++halving) {
        beta.col(k) = old_col + delta;
        const Eigen::MatrixXd trial_eta = eta + xk * delta.transpose();
        trial_obj = smooth_loss(eps2, trial_eta) + penalty(beta, cfg.lambda_d);
        if (trial_obj <= obj + 1e-12) {
          eta = trial_eta;
          obj = trial_obj;
          accepted = true;
          break;
        }
        delta *= 0.5;
      }
      if (!accepted) beta.col(k) = old_col;
    }

    ++diag.sweeps_run;
    const double prev = diag.objective_trace.back();
    diag.objective_trace.push_back(obj);
    if (std::abs(prev - obj) <= cfg.tol * std::max(1.0, std::abs(prev))) {
      BetaMatrix candidate(beta);
      ResidualMatrix res{residuals.eps_hat};
      diag.kkt_violation = variance_kkt_residual(candidate, res, x, cfg);
      if (diag.kkt_violation <= kkt_target) {
        diag.converged = true;
        break;
      }
    }
  }

  BetaMatrix fitted(beta);
  diag.kkt_violation = variance_kkt_residual(fitted, residuals, x, cfg);
  if (diag.objective_trace.size() <= 1) diag.converged = false;
  return {std::move(fitted), std::move(diag)};
}

double variance_kkt_residual(const BetaMatrix& beta,
                             const ResidualMatrix& residuals,
                             const Eigen::MatrixXd& x, const VarConfig& cfg) {
  const Eigen::MatrixXd x_aug = augment_ones(x);
  const Eigen::MatrixXd eps2 = residuals.eps_hat.cwiseAbs2();
  const Eigen::MatrixXd eta = x_aug * beta.entries().transpose();

  double viol = 0.0;
  for (int k = 0; k < x_aug.cols(); ++k) {
    if (x_aug.col(k).squaredNorm() <= 0.0) continue;
    const Eigen::VectorXd g = block_gradient(eps2, eta, x_aug.col(k));
    if (k == 0) {
      viol = std::max(viol, g.cwiseAbs().maxCoeff());
      continue;
    }
    const double bn = beta.entries().col(k).norm();
    if (bn > 0.0) {
      viol = std::max(
          viol, (g + cfg.lambda_d * beta.entries().col(k) / bn).norm());
    } else {
      viol = std::max(viol, g.norm() - cfg.lambda_d);
    }
  }
  return std::max(viol, 0.0);
}

double lambda_d_max(const ResidualMatrix& residuals, const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd x_aug = augment_ones(x);
  const Eigen::MatrixXd eps2 = residuals.eps_hat.cwiseAbs2();
  const int p = static_cast<int>(eps2.cols());

  Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(p, x_aug.cols());
  beta.col(0) =
      (eps2.colwise().mean().array() + 1e-8).log().min(kExpClamp).max(-kExpClamp);
  const Eigen::MatrixXd eta = x_aug * beta.transpose();

  double max_norm = 0.0;
  for (int k = 1; k < x_aug.cols(); ++k)
    max_norm = std::max(max_norm,
                        block_gradient(eps2, eta, x_aug.col(k)).norm());
  return max_norm;
}

}  // namespace cdcd
