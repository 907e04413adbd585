#include "cdcd/model.hpp"

#include <algorithm>
#include <cmath>

namespace cdcd {

PhiTensor::PhiTensor(int p, int q) : p_(p), q_(q) {
  if (p < 2) throw std::invalid_argument("PhiTensor: p must be >= 2");
  if (q < 0) throw std::invalid_argument("PhiTensor: q must be >= 0");
  slices_.assign(q + 1, Eigen::MatrixXd::Zero(p - 1, p - 1));
}

void PhiTensor::check_index(int t, int j, int k) const {
  if (t < 2 || t > p_ || j < 1 || j >= t || k < 0 || k > q_)
    throw std::invalid_argument("PhiTensor: index (t,j,k) out of range");
}

double PhiTensor::operator()(int t, int j, int k) const {
  check_index(t, j, k);
  return slices_[k](j - 1, t - 2);
}

void PhiTensor::set(int t, int j, int k, double value) {
  check_index(t, j, k);
  slices_[k](j - 1, t - 2) = value;
}

const Eigen::MatrixXd& PhiTensor::slice(int k) const {
  if (k < 0 || k > q_) throw std::invalid_argument("PhiTensor: slice out of range");
  return slices_[k];
}

Eigen::MatrixXd& PhiTensor::slice(int k) {
  if (k < 0 || k > q_) throw std::invalid_argument("PhiTensor: slice out of range");
  return slices_[k];
}

std::size_t PhiTensor::coefficient_count() const {
  return static_cast<std::size_t>(p_) * (p_ - 1) / 2 * (q_ + 1);
}

std::size_t PhiTensor::support_size() const {
  std::size_t count = 0;
  for (const auto& s : slices_)
    count += static_cast<std::size_t>((s.array() != 0.0).count());
  return count;
}

double PhiTensor::squared_norm() const {
  double total = 0.0;
  for (const auto& s : slices_) total += s.squaredNorm();
  return total;
}

bool PhiTensor::same_shape(const PhiTensor& other) const {
  return p_ == other.p_ && q_ == other.q_;
}

void PhiTensor::set_zero() {
  for (auto& s : slices_) s.setZero();
}

Eigen::MatrixXd build_T(const CholeskyModel& model, const Eigen::VectorXd& x) {
  const int p = model.p();
  const int q = model.q();
  if (x.size() != q)
    throw std::invalid_argument("build_T: covariate vector length mismatch");
  if (!x.allFinite())
    throw std::invalid_argument("build_T: covariate vector must be finite");

  Eigen::MatrixXd t_mat = Eigen::MatrixXd::Identity(p, p);
  for (int t = 2; t <= p; ++t) {
    for (int j = 1; j < t; ++j) {
      double f = model.phi(t, j, 0);
      for (int k = 1; k <= q; ++k) f += model.phi(t, j, k) * x(k - 1);
      t_mat(t - 1, j - 1) = -f;
    }
  }
  return t_mat;
}

Eigen::VectorXd build_D(const CholeskyModel& model, const Eigen::VectorXd& x) {
  const int p = model.p();
  const int q = model.q();
  if (x.size() != q)
    throw std::invalid_argument("build_D: covariate vector length mismatch");
  if (!x.allFinite())
    throw std::invalid_argument("build_D: covariate vector must be finite");

  Eigen::VectorXd d(p);
  for (int t = 1; t <= p; ++t) {
    double eta = model.beta(t, 0);
    for (int k = 1; k <= q; ++k) eta += model.beta(t, k) * x(k - 1);
    eta = std::clamp(eta, -kExpClamp, kExpClamp);
    d(t - 1) = std::exp(eta);
  }
  return d;
}

SubjectCov assemble(const CholeskyModel& model, const Eigen::VectorXd& x) {
  SubjectCov out;
  out.t_matrix = build_T(model, x);
  out.d_diag = build_D(model, x);

  const int p = model.p();
  const Eigen::VectorXd inv_d = out.d_diag.cwiseInverse();
  Eigen::MatrixXd precision =
      out.t_matrix.transpose() * inv_d.asDiagonal() * out.t_matrix;
  out.precision = 0.5 * (precision + precision.transpose());

  // Sigma = T^{-1} D T^{-T}: forward solve for T^{-1}, no matrix inversion
  // of the precision.
  Eigen::MatrixXd t_inv = out.t_matrix.triangularView<Eigen::Lower>().solve(
      Eigen::MatrixXd::Identity(p, p));
  Eigen::MatrixXd sigma = t_inv * out.d_diag.asDiagonal() * t_inv.transpose();
  out.sigma = 0.5 * (sigma + sigma.transpose());
  return out;
}

Eigen::MatrixXd predict_mean_adjust(const CholeskyModel& model,
                                    const Eigen::MatrixXd& y_raw) {
  if (y_raw.cols() != model.p())
    throw std::invalid_argument("predict_mean_adjust: column count mismatch");
  if (y_raw.rows() < 1)
    throw std::invalid_argument("predict_mean_adjust: empty response matrix");
  return y_raw.rowwise() - model.column_means.transpose();
}

Eigen::VectorXd column_means(const Eigen::MatrixXd& y) {
  return y.colwise().mean().transpose();
}

}  // namespace cdcd
