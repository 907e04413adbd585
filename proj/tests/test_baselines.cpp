#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "cdcd/baselines.hpp"

using namespace cdcd;

namespace {

Eigen::MatrixXd gaussian_matrix(int n, int p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd m(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) m(i, j) = gauss(rng);
  return m;
}

}  // namespace

TEST_CASE("dense_sample basics") {
  // single standard-basis row
  Eigen::MatrixXd e1 = Eigen::MatrixXd::Zero(1, 4);
  e1(0, 0) = 1.0;
  const BaselineEstimate single = dense_sample(e1);
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(4, 4);
  expected(0, 0) = 1.0;
  CHECK((single.sigma - expected).cwiseAbs().maxCoeff() == 0.0);
  CHECK(single.method == "dense-sample");

  // divisor n and symmetry
  const Eigen::MatrixXd y = gaussian_matrix(13, 3, 1);
  const BaselineEstimate s = dense_sample(y);
  CHECK((s.sigma - y.transpose() * y / 13.0).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((s.sigma - s.sigma.transpose()).cwiseAbs().maxCoeff() == 0.0);

  // PSD Gram form
  CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(s.sigma)
            .eigenvalues()
            .minCoeff() >= -1e-10);

  // row-permutation invariance
  Eigen::MatrixXd yp = y;
  yp.row(0).swap(yp.row(7));
  CHECK((dense_sample(yp).sigma - s.sigma).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dense_sample concentrates around the truth") {
  Eigen::MatrixXd y = gaussian_matrix(20000, 5, 3);
  y.rowwise() -= y.colwise().mean();
  const BaselineEstimate s = dense_sample(y);
  CHECK((s.sigma - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() <=
        0.05);
}

TEST_CASE("sparse_sample thresholding behavior") {
  const Eigen::MatrixXd y = gaussian_matrix(40, 4, 5);
  const BaselineEstimate dense = dense_sample(y);

  // lambda = 0 equals the dense estimate
  CHECK((sparse_sample(y, 0.0).sigma - dense.sigma).cwiseAbs().maxCoeff() ==
        0.0);

  // lambda above the largest off-diagonal leaves only the diagonal
  double max_off = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (i != j) max_off = std::max(max_off, std::abs(dense.sigma(i, j)));
  const BaselineEstimate diag = sparse_sample(y, max_off);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      if (i == j)
        CHECK(diag.sigma(i, j) == dense.sigma(i, j));
      else
        CHECK(diag.sigma(i, j) == 0.0);
    }

  // symmetry, diagonal preserved, magnitudes never increase
  const BaselineEstimate mid = sparse_sample(y, 0.05);
  CHECK((mid.sigma - mid.sigma.transpose()).cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < 4; ++i) {
    CHECK(mid.sigma(i, i) == dense.sigma(i, i));
    for (int j = 0; j < 4; ++j)
      CHECK(std::abs(mid.sigma(i, j)) <= std::abs(dense.sigma(i, j)) + 1e-15);
  }
  CHECK(mid.threshold.has_value());
  CHECK(*mid.threshold == 0.05);
}

TEST_CASE("sparse_sample_cv selects a useful threshold deterministically") {
  Eigen::MatrixXd y = gaussian_matrix(150, 6, 7);
  // plant one strong off-diagonal dependence
  y.col(1) = 0.8 * y.col(0) + 0.6 * y.col(1);
  y.rowwise() -= y.colwise().mean();

  const BaselineEstimate a = sparse_sample_cv(y, 5, 11);
  const BaselineEstimate b = sparse_sample_cv(y, 5, 11);
  REQUIRE(a.threshold.has_value());
  CHECK(*a.threshold == *b.threshold);
  CHECK((a.sigma - b.sigma).cwiseAbs().maxCoeff() == 0.0);

  // the planted dependence survives thresholding
  CHECK(std::abs(a.sigma(1, 0)) > 0.0);
}

TEST_CASE("baseline_precision inverts or reports singularity") {
  const Eigen::MatrixXd y = gaussian_matrix(60, 4, 13);
  const BaselineEstimate s = dense_sample(y);
  const auto precision = baseline_precision(s.sigma);
  REQUIRE(precision.has_value());
  CHECK((*precision * s.sigma - Eigen::MatrixXd::Identity(4, 4))
            .cwiseAbs()
            .maxCoeff() < 1e-8);

  // n < p: the sample covariance is rank deficient
  const Eigen::MatrixXd small = gaussian_matrix(3, 6, 17);
  const BaselineEstimate rank_deficient = dense_sample(small);
  CHECK_FALSE(baseline_precision(rank_deficient.sigma).has_value());
}
