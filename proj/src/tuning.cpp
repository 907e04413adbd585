#include "cdcd/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace cdcd {

namespace {

std::vector<double> default_alphas(int n_alphas) {
  if (n_alphas < 1) throw std::invalid_argument("build_grid: n_alphas must be >= 1");
  if (n_alphas == 1) return {0.5};
  if (n_alphas == 5) return {0.05, 0.25, 0.5, 0.75, 0.95};
  std::vector<double> alphas(n_alphas);
  for (int i = 0; i < n_alphas; ++i)
    alphas[i] = 0.05 + 0.9 * i / static_cast<double>(n_alphas - 1);
  return alphas;
}

std::vector<double> log_spaced_descending(double top, double bottom, int count) {
  std::vector<double> values;
  if (top <= 0.0) {
    values.push_back(0.0);
    return values;
  }
  if (count <= 1) {
    values.push_back(top);
    return values;
  }
  const double lt = std::log(top);
  const double lb = std::log(bottom);
  values.resize(count);
  for (int i = 0; i < count; ++i)
    values[i] = std::exp(lt + (lb - lt) * i / static_cast<double>(count - 1));
  values.front() = top;
  return values;
}

double masked_abs_max(const Eigen::MatrixXd& g) {
  double best = 0.0;
  const int m = static_cast<int>(g.rows());
  for (int t0 = 0; t0 < m; ++t0)
    for (int j0 = 0; j0 <= t0; ++j0) best = std::max(best, std::abs(g(j0, t0)));
  return best;
}

double masked_st_norm(const Eigen::MatrixXd& g, double lambda) {
  double ss = 0.0;
  const int m = static_cast<int>(g.rows());
  for (int t0 = 0; t0 < m; ++t0)
    for (int j0 = 0; j0 <= t0; ++j0) {
      const double v = soft_threshold(g(j0, t0), lambda);
      ss += v * v;
    }
  return std::sqrt(ss);
}

double validation_loss(const Eigen::MatrixXd& y_val,
                       const Eigen::MatrixXd& x_val, const PhiTensor& phi) {
  const int p = phi.p();
  const int n_val = static_cast<int>(y_val.rows());
  Eigen::MatrixXd r = y_val.rightCols(p - 1);
  const Eigen::MatrixXd y_lag = y_val.leftCols(p - 1);
  for (int k = 0; k <= phi.q(); ++k) {
    if (phi.slice(k).squaredNorm() == 0.0) continue;
    Eigen::VectorXd xk = k == 0 ? Eigen::VectorXd::Ones(n_val)
                                : Eigen::VectorXd(x_val.col(k - 1));
    const Eigen::MatrixXd zk = y_lag.array().colwise() * xk.array();
    r.noalias() -= zk * phi.slice(k);
  }
  return r.squaredNorm() / (2.0 * n_val);
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<int>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(i) = m.row(rows[i]);
  return out;
}

}  // namespace

std::vector<int> make_folds(int n, int folds, std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("make_folds: folds must be >= 2");
  if (n < folds) throw std::invalid_argument("make_folds: n must be >= folds");
  if (n / folds < 2)
    throw std::invalid_argument("make_folds: a fold would have fewer than 2 subjects");
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> assignment(n);
  for (int i = 0; i < n; ++i) assignment[order[i]] = i % folds;
  return assignment;
}

TuningGrid build_grid(const InteractionDesign& design, int n_alphas,
                      int n_lambda0, std::optional<int> cap, double eps) {
  if (n_lambda0 < 1) throw std::invalid_argument("build_grid: n_lambda0 must be >= 1");
  if (eps <= 0.0 || eps > 1.0) throw std::invalid_argument("build_grid: eps out of range");

  // Gradient blocks at the all-zero model.
  std::vector<Eigen::MatrixXd> g(design.q() + 1);
  for (int k = 0; k <= design.q(); ++k)
    g[k] = design.z(k).transpose() * design.y_resp() /
           static_cast<double>(design.n());

  const double elem_max_k0 = masked_abs_max(g[0]);
  double elem_max = elem_max_k0;
  for (int k = 1; k <= design.q(); ++k)
    elem_max = std::max(elem_max, masked_abs_max(g[k]));

  const auto all_zero_at = [&](double alpha, double lambda0) {
    if (alpha * lambda0 + 1e-12 < elem_max_k0) return false;
    const double lambda = alpha * lambda0;
    const double lambda_g = (1.0 - alpha) * lambda0;
    for (int k = 1; k <= design.q(); ++k)
      if (masked_st_norm(g[k], lambda) > lambda_g + 1e-12) return false;
    return true;
  };

  TuningGrid grid;
  grid.alphas = default_alphas(n_alphas);
  grid.s_lambda_cap = cap;
  grid.lambda0_per_alpha.resize(grid.alphas.size());
  for (std::size_t a = 0; a < grid.alphas.size(); ++a) {
    const double alpha = grid.alphas[a];
    double lambda0_max = 0.0;
    if (elem_max > 0.0) {
      double lo = 0.0, hi = elem_max / alpha;
      for (int iter = 0; iter < 60; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (all_zero_at(alpha, mid))
          hi = mid;
        else
          lo = mid;
      }
      lambda0_max = hi * (1.0 + 1e-10);
    }
    grid.lambda0_per_alpha[a] =
        log_spaced_descending(lambda0_max, eps * lambda0_max, n_lambda0);
  }
  return grid;
}

CvReport cross_validate(const Eigen::MatrixXd& y_demeaned,
                        const Eigen::MatrixXd& x, const TuningGrid& grid,
                        int folds, std::uint64_t seed) {
  const int n = static_cast<int>(y_demeaned.rows());
  CvReport report;
  report.seed = seed;
  report.fold_assignment = make_folds(n, folds, seed);

  for (std::size_t a = 0; a < grid.alphas.size(); ++a)
    for (double lambda0 : grid.lambda0_per_alpha[a]) {
      CvCandidate c;
      c.alpha = grid.alphas[a];
      c.lambda0 = lambda0;
      c.lambda = c.alpha * lambda0;
      c.lambda_g = (1.0 - c.alpha) * lambda0;
      report.candidates.push_back(c);
    }

  std::vector<std::vector<double>> fold_losses(report.candidates.size());

  for (int fold = 0; fold < folds; ++fold) {
    std::vector<int> train_rows, val_rows;
    for (int i = 0; i < n; ++i)
      (report.fold_assignment[i] == fold ? val_rows : train_rows).push_back(i);

    const Eigen::MatrixXd y_train = take_rows(y_demeaned, train_rows);
    const Eigen::MatrixXd x_train = take_rows(x, train_rows);
    const Eigen::MatrixXd y_val = take_rows(y_demeaned, val_rows);
    const Eigen::MatrixXd x_val = take_rows(x, val_rows);
    const InteractionDesign design(y_train, x_train);

    std::size_t index = 0;
    for (std::size_t a = 0; a < grid.alphas.size(); ++a) {
      PhiTensor warm(design.p(), design.q());
      for (std::size_t l = 0; l < grid.lambda0_per_alpha[a].size(); ++l, ++index) {
        CvCandidate& c = report.candidates[index];
        SglConfig cfg;
        cfg.lambda = c.lambda;
        cfg.lambda_g = c.lambda_g;
        auto [phi, diag] = fit_cholesky(design, cfg, &warm);
        warm = phi;
        fold_losses[index].push_back(validation_loss(y_val, x_val, phi));
        c.max_support =
            std::max(c.max_support, static_cast<int>(phi.support_size()));
      }
    }
  }

  for (std::size_t i = 0; i < report.candidates.size(); ++i) {
    CvCandidate& c = report.candidates[i];
    const auto& losses = fold_losses[i];
    c.mean_loss = std::accumulate(losses.begin(), losses.end(), 0.0) /
                  static_cast<double>(losses.size());
    double ss = 0.0;
    for (double l : losses) ss += (l - c.mean_loss) * (l - c.mean_loss);
    c.se_loss = losses.size() > 1
                    ? std::sqrt(ss / (losses.size() - 1)) /
                          std::sqrt(static_cast<double>(losses.size()))
                    : 0.0;
    if (grid.s_lambda_cap && c.max_support > *grid.s_lambda_cap)
      c.feasible = false;
  }

  for (std::size_t i = 0; i < report.candidates.size(); ++i) {
    const CvCandidate& c = report.candidates[i];
    if (!c.feasible) continue;
    if (report.selected_index < 0) {
      report.selected_index = static_cast<int>(i);
      continue;
    }
    const CvCandidate& best = report.candidates[report.selected_index];
    if (c.mean_loss < best.mean_loss ||
        (c.mean_loss == best.mean_loss && c.lambda0 > best.lambda0))
      report.selected_index = static_cast<int>(i);
  }
  if (report.selected_index < 0 && !report.candidates.empty()) {
    // The support cap can rule out every candidate (fold-level fits may pick
    // up an entry even at the full-data boundary). Fall back to the candidate
    // closest to honoring the cap: smallest support, then smallest loss.
    for (std::size_t i = 0; i < report.candidates.size(); ++i) {
      const CvCandidate& c = report.candidates[i];
      const CvCandidate& best = report.candidates[std::max(report.selected_index, 0)];
      if (report.selected_index < 0 || c.max_support < best.max_support ||
          (c.max_support == best.max_support && c.mean_loss < best.mean_loss))
        report.selected_index = static_cast<int>(i);
    }
  }
  if (report.selected_index >= 0) {
    report.selected_lambda = report.candidates[report.selected_index].lambda;
    report.selected_lambda_g = report.candidates[report.selected_index].lambda_g;
  }
  return report;
}

double cross_validate_variance(const ResidualMatrix& residuals,
                               const Eigen::MatrixXd& x, int folds,
                               std::uint64_t seed, int n_lambda, double eps) {
  const int n = static_cast<int>(residuals.eps_hat.rows());
  const auto assignment = make_folds(n, folds, seed);

  const double top = lambda_d_max(residuals, x);
  const std::vector<double> lambdas =
      log_spaced_descending(top * (1.0 + 1e-10), eps * top, n_lambda);

  std::vector<double> mean_loss(lambdas.size(), 0.0);
  for (int fold = 0; fold < folds; ++fold) {
    std::vector<int> train_rows, val_rows;
    for (int i = 0; i < n; ++i)
      (assignment[i] == fold ? val_rows : train_rows).push_back(i);

    ResidualMatrix eps_train{take_rows(residuals.eps_hat, train_rows)};
    ResidualMatrix eps_val{take_rows(residuals.eps_hat, val_rows)};
    const Eigen::MatrixXd x_train = take_rows(x, train_rows);
    const Eigen::MatrixXd x_val = take_rows(x, val_rows);

    BetaMatrix warm;
    bool have_warm = false;
    for (std::size_t l = 0; l < lambdas.size(); ++l) {
      VarConfig cfg;
      cfg.lambda_d = lambdas[l];
      auto [beta, diag] =
          fit_variance(eps_train, x_train, cfg, have_warm ? &warm : nullptr);
      warm = beta;
      have_warm = true;
      VarConfig loss_cfg;  // unpenalized held-out loss
      mean_loss[l] += var_objective(beta, eps_val, x_val, loss_cfg) /
                      static_cast<double>(folds);
    }
  }

  std::size_t best = 0;
  for (std::size_t l = 1; l < lambdas.size(); ++l)
    if (mean_loss[l] < mean_loss[best]) best = l;
  return lambdas[best];
}

FitResult fit_model(const Eigen::MatrixXd& y_raw, const Eigen::MatrixXd& x,
                    const FitOptions& options) {
  if (!y_raw.allFinite() || !x.allFinite())
    throw std::invalid_argument("fit_model: non-finite input");
  if (y_raw.rows() != x.rows())
    throw std::invalid_argument("fit_model: Y and X row counts differ");

  FitResult result;
  result.model.column_means = column_means(y_raw);
  Eigen::MatrixXd y = y_raw.rowwise() - result.model.column_means.transpose();
  Eigen::MatrixXd x_fit = x;

  if (options.standardize) {
    Standardization std_info;
    std_info.y_scale = (y.cwiseAbs2().colwise().mean()).cwiseSqrt().transpose();
    for (int j = 0; j < y.cols(); ++j) {
      if (std_info.y_scale(j) <= 0.0) std_info.y_scale(j) = 1.0;
      y.col(j) /= std_info.y_scale(j);
    }
    std_info.x_center = x.colwise().mean().transpose();
    Eigen::MatrixXd xc = x.rowwise() - std_info.x_center.transpose();
    std_info.x_scale = (xc.cwiseAbs2().colwise().mean()).cwiseSqrt().transpose();
    for (int j = 0; j < xc.cols(); ++j) {
      if (std_info.x_scale(j) <= 0.0) std_info.x_scale(j) = 1.0;
      xc.col(j) /= std_info.x_scale(j);
    }
    x_fit = xc;
    result.model.standardization = std_info;
  }

  const InteractionDesign design(y, x_fit);

  double lambda = 0.0, lambda_g = 0.0;
  if (options.lambda && options.lambda_g) {
    lambda = *options.lambda;
    lambda_g = *options.lambda_g;
    SglConfig cfg = options.sgl;
    cfg.lambda = lambda;
    cfg.lambda_g = lambda_g;
    auto [phi, diag] = fit_cholesky(design, cfg);
    result.model.phi = std::move(phi);
    result.cholesky_diag = std::move(diag);
  } else {
    const TuningGrid grid = build_grid(design, options.n_alphas,
                                       options.n_lambda0, options.cap,
                                       options.grid_eps);
    result.cv = cross_validate(y, x_fit, grid, options.folds, options.seed);
    lambda = result.cv.selected_lambda;
    lambda_g = result.cv.selected_lambda_g;

    // Refit on the full data along the selected alpha path for warm starts.
    const CvCandidate& sel = result.cv.candidates[result.cv.selected_index];
    std::size_t a = 0;
    while (a < grid.alphas.size() && grid.alphas[a] != sel.alpha) ++a;
    PhiTensor warm(design.p(), design.q());
    for (double lambda0 : grid.lambda0_per_alpha[a]) {
      if (lambda0 < sel.lambda0) break;
      SglConfig cfg = options.sgl;
      cfg.lambda = sel.alpha * lambda0;
      cfg.lambda_g = (1.0 - sel.alpha) * lambda0;
      auto [phi, diag] = fit_cholesky(design, cfg, &warm);
      warm = std::move(phi);
      result.cholesky_diag = std::move(diag);
    }
    result.model.phi = std::move(warm);
  }

  const ResidualMatrix residuals = compute_residuals(y, x_fit, result.model.phi);

  double lambda_d = 0.0;
  if (options.lambda_d) {
    lambda_d = *options.lambda_d;
  } else {
    lambda_d = cross_validate_variance(residuals, x_fit, options.folds,
                                       options.seed + 1);
  }
  result.cv.selected_lambda_d = lambda_d;

  VarConfig vcfg = options.var;
  vcfg.lambda_d = lambda_d;
  auto [beta, vdiag] = fit_variance(residuals, x_fit, vcfg);
  result.model.beta = std::move(beta);
  result.variance_diag = std::move(vdiag);

  result.model.info.lambda = lambda;
  result.model.info.lambda_g = lambda_g;
  result.model.info.lambda_d = lambda_d;
  result.model.info.cholesky_converged = result.cholesky_diag.converged;
  result.model.info.variance_converged = result.variance_diag.converged;
  result.model.info.cholesky_sweeps = result.cholesky_diag.sweeps_run;
  result.model.info.variance_iters = result.variance_diag.sweeps_run;
  result.model.info.cholesky_kkt = result.cholesky_diag.kkt_violation;
  result.model.info.variance_kkt = result.variance_diag.kkt_violation;
  return result;
}

}  // namespace cdcd
