#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "cdcd/model.hpp"

using namespace cdcd;

namespace {

CholeskyModel random_model(int p, int q, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 0.3);
  CholeskyModel model;
  model.phi = PhiTensor(p, q);
  model.beta = BetaMatrix(p, q);
  model.column_means = Eigen::VectorXd::Zero(p);
  for (int k = 0; k <= q; ++k)
    for (int t = 2; t <= p; ++t)
      for (int j = 1; j < t; ++j) model.phi.set(t, j, k, gauss(rng));
  for (int k = 0; k <= q; ++k)
    for (int t = 1; t <= p; ++t) model.beta.set(t, k, gauss(rng));
  return model;
}

}  // namespace

TEST_CASE("PhiTensor indexing and bounds") {
  PhiTensor phi(4, 2);
  CHECK(phi.p() == 4);
  CHECK(phi.q() == 2);
  CHECK(phi.coefficient_count() == 6 * 3);
  CHECK(phi.support_size() == 0);

  phi.set(2, 1, 0, 1.5);
  phi.set(4, 3, 2, -0.5);
  CHECK(phi(2, 1, 0) == 1.5);
  CHECK(phi(4, 3, 2) == -0.5);
  CHECK(phi.support_size() == 2);
  CHECK(phi.squared_norm() == doctest::Approx(1.5 * 1.5 + 0.25));

  // slice layout: entry (j-1, t-2)
  CHECK(phi.slice(0)(0, 0) == 1.5);
  CHECK(phi.slice(2)(2, 2) == -0.5);

  CHECK_THROWS_AS(phi(1, 1, 0), std::invalid_argument);   // t < 2
  CHECK_THROWS_AS(phi(3, 3, 0), std::invalid_argument);   // j >= t
  CHECK_THROWS_AS(phi(2, 1, 3), std::invalid_argument);   // k > q
  CHECK_THROWS_AS(phi.set(5, 1, 0, 1.0), std::invalid_argument);

  PhiTensor other(4, 2);
  CHECK(phi.same_shape(other));
  CHECK_FALSE(phi.same_shape(PhiTensor(5, 2)));
  phi.set_zero();
  CHECK(phi.support_size() == 0);
}

TEST_CASE("BetaMatrix indexing") {
  BetaMatrix beta(3, 2);
  beta.set(1, 0, 2.0);
  beta.set(3, 2, -1.0);
  CHECK(beta(1, 0) == 2.0);
  CHECK(beta(3, 2) == -1.0);
  CHECK(beta.p() == 3);
  CHECK(beta.q() == 2);
  CHECK(beta.entries()(0, 0) == 2.0);
}

TEST_CASE("build_T is unit lower triangular with negated coefficients") {
  CholeskyModel model = random_model(5, 2, 11);
  Eigen::VectorXd x(2);
  x << 1.0, -0.5;
  const Eigen::MatrixXd T = build_T(model, x);
  for (int t = 0; t < 5; ++t) {
    CHECK(T(t, t) == 1.0);
    for (int j = t + 1; j < 5; ++j) CHECK(T(t, j) == 0.0);
  }
  // entry (t, j) = -(phi_{t,j,0} + sum_k phi_{t,j,k} x_k), 1-based t, j
  const double expected =
      -(model.phi(3, 2, 0) + model.phi(3, 2, 1) * x(0) +
        model.phi(3, 2, 2) * x(1));
  CHECK(T(2, 1) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("build_D exponentiates the clamped linear predictor") {
  CholeskyModel model = random_model(3, 1, 5);
  model.beta.set(2, 0, 100.0);  // force the clamp
  model.beta.set(2, 1, 0.0);
  Eigen::VectorXd x(1);
  x << 1.0;
  const Eigen::VectorXd d = build_D(model, x);
  CHECK(d(1) == doctest::Approx(std::exp(kExpClamp)));
  CHECK(d(0) ==
        doctest::Approx(std::exp(model.beta(1, 0) + model.beta(1, 1))));
  CHECK(d.minCoeff() > 0.0);
}

TEST_CASE("assemble satisfies the factorization identities") {
  const CholeskyModel model = random_model(6, 2, 42);
  Eigen::VectorXd x(2);
  x << 0.7, -1.2;
  const SubjectCov cov = assemble(model, x);
  const Eigen::MatrixXd T = build_T(model, x);
  const Eigen::VectorXd d = build_D(model, x);

  // T Sigma T' = D
  const Eigen::MatrixXd lhs = T * cov.sigma * T.transpose();
  CHECK((lhs - Eigen::MatrixXd(d.asDiagonal())).cwiseAbs().maxCoeff() <
        1e-10);
  // precision = T' D^{-1} T
  const Eigen::MatrixXd omega =
      T.transpose() * d.cwiseInverse().asDiagonal() * T;
  CHECK((cov.precision - omega).cwiseAbs().maxCoeff() < 1e-12);
  // sigma * precision = I
  CHECK((cov.sigma * cov.precision - Eigen::MatrixXd::Identity(6, 6))
            .cwiseAbs()
            .maxCoeff() < 1e-9);
  // symmetry and positive definiteness
  CHECK((cov.sigma - cov.sigma.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((cov.precision - cov.precision.transpose()).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cov.sigma)
            .eigenvalues()
            .minCoeff() > 0.0);
}

TEST_CASE("assemble with zero coefficients gives identity-scaled model") {
  CholeskyModel model;
  model.phi = PhiTensor(4, 1);
  model.beta = BetaMatrix(4, 1);
  model.column_means = Eigen::VectorXd::Zero(4);
  const SubjectCov cov = assemble(model, Eigen::VectorXd::Zero(1));
  CHECK((cov.sigma - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <
        1e-14);
  CHECK((cov.precision - Eigen::MatrixXd::Identity(4, 4))
            .cwiseAbs()
            .maxCoeff() < 1e-14);
}

TEST_CASE("column means and mean adjustment") {
  Eigen::MatrixXd y(3, 2);
  y << 1, 10, 2, 20, 3, 30;
  const Eigen::VectorXd means = column_means(y);
  CHECK(means(0) == doctest::Approx(2.0));
  CHECK(means(1) == doctest::Approx(20.0));

  CholeskyModel model;
  model.phi = PhiTensor(2, 1);
  model.beta = BetaMatrix(2, 1);
  model.column_means = means;
  const Eigen::MatrixXd adjusted = predict_mean_adjust(model, y);
  CHECK(adjusted.colwise().mean().cwiseAbs().maxCoeff() < 1e-14);
  CHECK(adjusted(0, 1) == doctest::Approx(-10.0));
}
