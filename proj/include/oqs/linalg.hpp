// Dense linear-algebra utilities shared by the propagators.
#pragma once

#include "oqs/qcore.hpp"

namespace oqs {

/// exp(a) by scaling and squaring with a degree-13 Pade approximant.
Matrix matrix_exp(const Matrix& a);
RealMatrix matrix_exp(const RealMatrix& a);

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> matrix_exp(
    const Eigen::MatrixBase<Derived>& a) {
  return matrix_exp(Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>(a));
}

/// Ratio of extreme singular values (infinity for singular input).
double condition_number(const Matrix& a);

/// Superoperator of rho -> a rho.
Matrix left_multiplication(const Matrix& a);
/// Superoperator of rho -> rho b.
Matrix right_multiplication(const Matrix& b);

/// Repeated application of exp(tau * g) to vectors. Diagonalizes `g` once
/// when the eigenvector basis is well conditioned, otherwise falls back to
/// a full matrix exponential per call.
class SemigroupPropagator {
 public:
  explicit SemigroupPropagator(Matrix generator);

  Vector apply(double tau, const Vector& v) const;
  Matrix matrix(double tau) const;
  bool trivial() const { return trivial_; }

 private:
  Matrix generator_;
  bool trivial_ = false;
  bool diagonal_ = false;
  Vector eigenvalues_;
  Matrix vectors_;
  Matrix inverse_;
};

}  // namespace oqs
