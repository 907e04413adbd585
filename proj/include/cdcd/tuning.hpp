#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "cdcd/model.hpp"
#include "cdcd/sgl_solver.hpp"
#include "cdcd/variance_solver.hpp"

namespace cdcd {

/// Candidate grid under the mixing parameterization lambda = alpha * lambda0,
/// lambda_g = (1 - alpha) * lambda0.
struct TuningGrid {
  std::vector<double> alphas;                        // sorted ascending
  std::vector<std::vector<double>> lambda0_per_alpha;  // strictly decreasing
  std::optional<int> s_lambda_cap;
};

struct CvCandidate {
  double alpha = 0.0;
  double lambda0 = 0.0;
  double lambda = 0.0;
  double lambda_g = 0.0;
  double mean_loss = 0.0;
  double se_loss = 0.0;
  int max_support = 0;  // largest fitted support across folds
  bool feasible = true;
};

struct CvReport {
  std::vector<CvCandidate> candidates;
  int selected_index = -1;
  double selected_lambda = 0.0;
  double selected_lambda_g = 0.0;
  double selected_lambda_d = 0.0;
  std::vector<int> fold_assignment;
  std::uint64_t seed = 0;
};

/// Seeded subject-level fold partition: a fold index in [0, folds) per row.
std::vector<int> make_folds(int n, int folds, std::uint64_t seed);

/// For each alpha, lambda0 descends log-spaced from the smallest value
/// producing an all-zero fit down to eps times that value.
TuningGrid build_grid(const InteractionDesign& design, int n_alphas = 5,
                      int n_lambda0 = 30,
                      std::optional<int> cap = std::nullopt, double eps = 1e-3);

/// L-fold CV over (lambda, lambda_g) with warm starts along each alpha path.
/// Validation loss is the unpenalized prediction error (1/2 n_val) ||R_val||_F^2.
/// If the support cap rules out every candidate, the candidate with the
/// smallest fold support (then smallest loss) is selected as a fallback.
CvReport cross_validate(const Eigen::MatrixXd& y_demeaned,
                        const Eigen::MatrixXd& x, const TuningGrid& grid,
                        int folds = 5, std::uint64_t seed = 0);

/// Separate CV loop for lambda_d on fixed residuals.
double cross_validate_variance(const ResidualMatrix& residuals,
                               const Eigen::MatrixXd& x, int folds = 5,
                               std::uint64_t seed = 0, int n_lambda = 15,
                               double eps = 1e-3);

/// End-to-end fitting options (CLI and benchmark entry point).
struct FitOptions {
  std::optional<double> lambda;
  std::optional<double> lambda_g;
  std::optional<double> lambda_d;
  int folds = 5;
  std::uint64_t seed = 0;
  bool standardize = false;
  int n_alphas = 5;
  int n_lambda0 = 30;
  double grid_eps = 1e-3;
  std::optional<int> cap;
  SglConfig sgl;
  VarConfig var;
};

struct FitResult {
  CholeskyModel model;
  CvReport cv;
  FitDiagnostics cholesky_diag;
  FitDiagnostics variance_diag;
};

/// Demean (and optionally standardize), tune unless penalties are pinned,
/// fit the Cholesky factors, then the variance model on the residuals.
FitResult fit_model(const Eigen::MatrixXd& y_raw, const Eigen::MatrixXd& x,
                    const FitOptions& options);

}  // namespace cdcd
