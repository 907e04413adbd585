#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <tuple>
#include <vector>

#include "cdcd/model.hpp"

namespace cdcd {

enum class StructureKind { AR1, Hub, Random };

/// Generator parameters for the per-subject true covariance. For the Random kind
/// the sparsity pattern of T1 is realized from the seed at construction.
struct CovarianceStructure {
  StructureKind kind = StructureKind::AR1;
  int p = 50;
  double rho = 0.5;
  int hub_block = 10;
  double hub_boost = 4.5;
  double edge_fraction = 0.05;
  double edge_value = -0.5;
  std::uint64_t seed = 0;
  Eigen::MatrixXd t1;  // realized strictly-lower factor slope (Random only)
};

CovarianceStructure make_structure(StructureKind kind, int p,
                                   std::uint64_t seed = 0, double rho = 0.5,
                                   int hub_block = 10, double hub_boost = 4.5,
                                   double edge_fraction = 0.05,
                                   double edge_value = -0.5);

/// Index triple with the 1-based coefficient convention.
struct PhiIndex {
  int t, j, k;
  auto operator<=>(const PhiIndex&) const = default;
};

struct DatasetTruth {
  std::vector<Eigen::MatrixXd> sigma;      // per subject
  std::vector<Eigen::MatrixXd> precision;  // per subject
  PhiTensor phi;
  std::vector<PhiIndex> support;
};

struct Dataset {
  Eigen::MatrixXd y;  // n x p
  Eigen::MatrixXd x;  // n x q
  std::optional<DatasetTruth> truth;
};

/// (Sigma(x), Omega(x)) for the structure; both positive definite.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> sigma_of_x(
    const CovarianceStructure& structure, const Eigen::VectorXd& x);

/// Modified Cholesky factorization Sigma = T^{-1} D T^{-T} with T unit lower
/// triangular; returns (T, diag of D).
std::pair<Eigen::MatrixXd, Eigen::VectorXd> modified_cholesky(
    const Eigen::MatrixXd& sigma);

/// X ~ iid Bernoulli(0.5), y_i ~ N(0, Sigma(x_i)) via the Cholesky factor.
/// Deterministic given the seed.
Dataset generate(const CovarianceStructure& structure, int n, int q,
                 std::uint64_t seed, bool include_truth = true);

/// True nonzero phi coordinates, from exact factorization at x1 in {0, 1}.
std::vector<PhiIndex> true_support(const CovarianceStructure& structure);

/// True coefficient tensor implied by the structure (slices k >= 2 zero).
PhiTensor true_phi(const CovarianceStructure& structure, int q);

}  // namespace cdcd
