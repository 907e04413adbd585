#include "cdcd/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace cdcd {

namespace {

Eigen::MatrixXd pd_inverse(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("simgen: matrix is not positive definite");
  Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
  return 0.5 * (inv + inv.transpose());
}

}  // namespace

CovarianceStructure make_structure(StructureKind kind, int p, std::uint64_t seed,
                                   double rho, int hub_block, double hub_boost,
                                   double edge_fraction, double edge_value) {
  if (p < 2) throw std::invalid_argument("make_structure: p must be >= 2");
  if (rho <= -1.0 || rho >= 1.0)
    throw std::invalid_argument("make_structure: rho must be in (-1,1)");
  CovarianceStructure s;
  s.kind = kind;
  s.p = p;
  s.rho = rho;
  s.hub_block = hub_block;
  s.hub_boost = hub_boost;
  s.edge_fraction = edge_fraction;
  s.edge_value = edge_value;
  s.seed = seed;

  if (kind == StructureKind::Hub) {
    if (hub_block < 2 || p % hub_block != 0)
      throw std::invalid_argument("make_structure: p must be divisible by hub_block");
  }
  if (kind == StructureKind::Random) {
    if (edge_fraction <= 0.0 || edge_fraction >= 1.0)
      throw std::invalid_argument("make_structure: edge_fraction must be in (0,1)");
    std::vector<std::pair<int, int>> positions;
    for (int t = 1; t < p; ++t)
      for (int j = 0; j < t; ++j) positions.emplace_back(t, j);
    std::mt19937_64 rng(seed);
    std::shuffle(positions.begin(), positions.end(), rng);
    const auto n_edges = static_cast<std::size_t>(
        std::lround(edge_fraction * static_cast<double>(positions.size())));
    s.t1 = Eigen::MatrixXd::Zero(p, p);
    for (std::size_t i = 0; i < std::min(n_edges, positions.size()); ++i)
      s.t1(positions[i].first, positions[i].second) = edge_value;
  }
  return s;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> sigma_of_x(
    const CovarianceStructure& structure, const Eigen::VectorXd& x) {
  if (x.size() < 1) throw std::invalid_argument("sigma_of_x: empty covariate vector");
  const double x1 = x(0);
  const int p = structure.p;

  switch (structure.kind) {
    case StructureKind::AR1: {
      Eigen::MatrixXd sigma(p, p);
      for (int j = 0; j < p; ++j)
        for (int k = 0; k < p; ++k)
          sigma(j, k) = j == k ? 1.0 : std::pow(structure.rho, std::abs(j - k)) * x1;
      return {sigma, pd_inverse(sigma)};
    }
    case StructureKind::Hub: {
      Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(p, p);
      const int b = structure.hub_block;
      for (int j = 0; j < p; ++j)
        omega(j, j) = j % b == 0 ? 0.5 + structure.hub_boost * x1 : 0.5;
      for (int m = 0; m < p / b; ++m) {
        const int hub = m * b;
        for (int j = hub + 1; j < hub + b; ++j) {
          omega(j, hub) = -0.5 * x1;
          omega(hub, j) = -0.5 * x1;
        }
      }
      return {pd_inverse(omega), omega};
    }
    case StructureKind::Random: {
      Eigen::MatrixXd t = Eigen::MatrixXd::Identity(p, p) + x1 * structure.t1;
      Eigen::MatrixXd omega = t.transpose() * t;  // D(x) = I
      omega = 0.5 * (omega + omega.transpose());
      Eigen::MatrixXd t_inv = t.triangularView<Eigen::Lower>().solve(
          Eigen::MatrixXd::Identity(p, p));
      Eigen::MatrixXd sigma = t_inv * t_inv.transpose();
      return {0.5 * (sigma + sigma.transpose()), omega};
    }
  }
  throw std::logic_error("sigma_of_x: unknown structure kind");
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> modified_cholesky(
    const Eigen::MatrixXd& sigma) {
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("modified_cholesky: matrix is not positive definite");
  const Eigen::MatrixXd l = llt.matrixL();
  const Eigen::VectorXd diag = l.diagonal();
  const Eigen::MatrixXd unit_lower = l * diag.cwiseInverse().asDiagonal();
  Eigen::MatrixXd t = unit_lower.triangularView<Eigen::Lower>().solve(
      Eigen::MatrixXd::Identity(sigma.rows(), sigma.cols()));
  return {t, diag.cwiseAbs2()};
}

Dataset generate(const CovarianceStructure& structure, int n, int q,
                 std::uint64_t seed, bool include_truth) {
  if (n < 1 || q < 1) throw std::invalid_argument("generate: n and q must be >= 1");
  const int p = structure.p;

  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Dataset data;
  data.x.resize(n, q);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < q; ++k) data.x(i, k) = coin(rng) ? 1.0 : 0.0;

  // Only x1 enters the generator; cache the two covariance levels.
  struct Level {
    Eigen::MatrixXd sigma, precision, chol;
  };
  auto make_level = [&](double x1) {
    Eigen::VectorXd xv = Eigen::VectorXd::Constant(1, x1);
    auto [sigma, omega] = sigma_of_x(structure, xv);
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("generate: Sigma(x) not positive definite");
    return Level{sigma, omega, Eigen::MatrixXd(llt.matrixL())};
  };
  const Level level0 = make_level(0.0);
  const Level level1 = make_level(1.0);

  data.y.resize(n, p);
  Eigen::VectorXd normals(p);
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < p; ++t) normals(t) = gauss(rng);
    const Level& level = data.x(i, 0) != 0.0 ? level1 : level0;
    data.y.row(i) = (level.chol * normals).transpose();
  }

  if (include_truth) {
    DatasetTruth truth;
    truth.sigma.reserve(n);
    truth.precision.reserve(n);
    for (int i = 0; i < n; ++i) {
      const Level& level = data.x(i, 0) != 0.0 ? level1 : level0;
      truth.sigma.push_back(level.sigma);
      truth.precision.push_back(level.precision);
    }
    truth.phi = true_phi(structure, q);
    truth.support = true_support(structure);
    data.truth = std::move(truth);
  }
  return data;
}

PhiTensor true_phi(const CovarianceStructure& structure, int q) {
  if (q < 1) throw std::invalid_argument("true_phi: q must be >= 1");
  const int p = structure.p;
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(1);
  const Eigen::VectorXd x1 = Eigen::VectorXd::Ones(1);
  const auto [t_at_0, d0] = modified_cholesky(sigma_of_x(structure, x0).first);
  const auto [t_at_1, d1] = modified_cholesky(sigma_of_x(structure, x1).first);

  PhiTensor phi(p, q);
  const auto snap = [](double v) { return std::abs(v) < 1e-9 ? 0.0 : v; };
  for (int t = 2; t <= p; ++t)
    for (int j = 1; j < t; ++j) {
      phi.set(t, j, 0, snap(-t_at_0(t - 1, j - 1)));
      phi.set(t, j, 1, snap(-(t_at_1(t - 1, j - 1) - t_at_0(t - 1, j - 1))));
    }
  return phi;
}

std::vector<PhiIndex> true_support(const CovarianceStructure& structure) {
  const PhiTensor phi = true_phi(structure, 1);
  std::vector<PhiIndex> support;
  for (int t = 2; t <= structure.p; ++t)
    for (int j = 1; j < t; ++j)
      for (int k = 0; k <= 1; ++k)
        if (phi(t, j, k) != 0.0) support.push_back({t, j, k});
  return support;
}

}  // namespace cdcd
