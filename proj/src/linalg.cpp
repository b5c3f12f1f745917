#include "oqs/linalg.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace oqs {

Matrix matrix_exp(const Matrix& a) {
  if (a.size() == 0) return a;
  return a.exp();
}

RealMatrix matrix_exp(const RealMatrix& a) {
  if (a.size() == 0) return a;
  return a.exp();
}

double condition_number(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return 1.0;
  const double smin = sv(sv.size() - 1);
  if (smin == 0.0) return INFINITY;
  return sv(0) / smin;
}

Matrix left_multiplication(const Matrix& a) {
  return tensor(Matrix::Identity(a.cols(), a.cols()), a);
}

Matrix right_multiplication(const Matrix& b) {
  return tensor(b.transpose(), Matrix::Identity(b.rows(), b.rows()));
}

SemigroupPropagator::SemigroupPropagator(Matrix generator) : generator_(std::move(generator)) {
  trivial_ = max_abs(generator_) == 0.0;
  if (trivial_) return;
  Eigen::ComplexEigenSolver<Matrix> es(generator_);
  if (es.info() != Eigen::Success) return;
  vectors_ = es.eigenvectors();
  if (condition_number(vectors_) > 1e6) return;
  eigenvalues_ = es.eigenvalues();
  inverse_ = vectors_.inverse();
  const Matrix back = vectors_ * eigenvalues_.asDiagonal() * inverse_;
  diagonal_ = max_abs(back - generator_) <= 1e-10 * std::max(1.0, max_abs(generator_));
}

Vector SemigroupPropagator::apply(double tau, const Vector& v) const {
  if (trivial_) return v;
  if (!diagonal_) return matrix_exp(tau * generator_) * v;
  Vector w = inverse_ * v;
  for (Index k = 0; k < w.size(); ++k) w(k) *= std::exp(tau * eigenvalues_(k));
  return vectors_ * w;
}

Matrix SemigroupPropagator::matrix(double tau) const {
  if (trivial_) return Matrix::Identity(generator_.rows(), generator_.cols());
  return matrix_exp(tau * generator_);
}

}  // namespace oqs
