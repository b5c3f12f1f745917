// Fixtures and independent oracles shared by the test binaries. Oracles here
// avoid the library's own code paths where practical: Kronecker products
// come from Eigen's KroneckerProduct module, exponentials from Eigen's
// MatrixFunctions, and operator actions are written out as matrix products.
#pragma once

#include "oqs/gksl.hpp"
#include "oqs/phase_type.hpp"
#include "oqs/qcore.hpp"
#include "oqs/random.hpp"

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <Eigen/SVD>

#include <cmath>
#include <vector>

namespace testing {

using oqs::Complex;
using oqs::Index;
using oqs::Matrix;
using oqs::RealMatrix;
using oqs::RealVector;
using oqs::Vector;

inline const Complex I1(0.0, 1.0);

inline Matrix kron(const Matrix& a, const Matrix& b) { return Eigen::kroneckerProduct(a, b).eval(); }

inline Matrix expm(const Matrix& a) { return a.exp(); }

inline Matrix ket_bra(Index dim, Index i, Index j) {
  Matrix m = Matrix::Zero(dim, dim);
  m(i, j) = 1.0;
  return m;
}

inline Matrix projector(const Vector& psi) { return psi * psi.adjoint() / psi.squaredNorm(); }

inline Vector plus_state() { return Vector::Constant(2, Complex(1.0 / std::sqrt(2.0), 0.0)); }

/// Trace norm from singular values; equals the eigenvalue sum for Hermitian A.
inline double svd_trace_norm(const Matrix& a) {
  return Eigen::JacobiSVD<Matrix>(a).singularValues().sum();
}

inline double max_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

/// Sum_k K rho K^dagger written out directly.
inline Matrix kraus_apply(const std::vector<Matrix>& ops, const Matrix& rho) {
  Matrix out = Matrix::Zero(ops.front().rows(), ops.front().rows());
  for (const auto& k : ops) out += k * rho * k.adjoint();
  return out;
}

/// Unnormalized Choi matrix by its definition sum_ij |i><j| (x) Phi(|i><j|).
template <typename Map>
Matrix choi_by_definition(Map&& phi, Index d_in, Index d_out) {
  Matrix c = Matrix::Zero(d_in * d_out, d_in * d_out);
  for (Index i = 0; i < d_in; ++i)
    for (Index j = 0; j < d_in; ++j)
      c.block(i * d_out, j * d_out, d_out, d_out) = phi(ket_bra(d_in, i, j));
  return c;
}

/// Superoperator of a linear map by applying it to the matrix units.
template <typename Map>
Matrix superop_by_definition(Map&& phi, Index d) {
  Matrix s(d * d, d * d);
  for (Index j = 0; j < d; ++j)
    for (Index i = 0; i < d; ++i) {
      const Matrix out = phi(ket_bra(d, i, j));
      s.col(i + d * j) = Eigen::Map<const Vector>(out.data(), d * d);
    }
  return s;
}

/// -i[H, rho] + sum gamma (L rho L^dagger - 1/2 {L^dagger L, rho})
inline Matrix lindblad_action(const oqs::GKSLModel& m, const Matrix& rho) {
  const Matrix& h = m.hamiltonian().matrix();
  Matrix out = -I1 * (h * rho - rho * h);
  for (const auto& c : m.channels()) {
    const Matrix ll = c.op.adjoint() * c.op;
    out += c.gamma * (c.op * rho * c.op.adjoint() - 0.5 * (ll * rho + rho * ll));
  }
  return out;
}

inline Matrix sigma_x() { return (Matrix(2, 2) << 0, 1, 1, 0).finished(); }
inline Matrix sigma_y() { return (Matrix(2, 2) << 0, -I1, I1, 0).finished(); }
inline Matrix sigma_z() { return (Matrix(2, 2) << 1, 0, 0, -1).finished(); }
/// |0><1|, with |1> the excited state
inline Matrix sigma_minus() { return (Matrix(2, 2) << 0, 1, 0, 0).finished(); }

inline oqs::GKSLModel random_gksl(Index dim, int n_channels, oqs::Rng& rng, double rate_scale = 1.0) {
  std::vector<oqs::LindbladChannel> ch;
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int k = 0; k < n_channels; ++k)
    ch.push_back({rate_scale * u(rng), oqs::ginibre(dim, dim, rng) / std::sqrt(double(dim))});
  return oqs::GKSLModel(oqs::HermitianOp(oqs::random_hermitian(dim, rng)), ch);
}

/// E[(-1)^N(t)] for a renewal process with Erlang(2, lambda) waiting times.
inline double erlang2_parity(double t, double lambda) {
  return std::exp(-lambda * t) * (std::cos(lambda * t) + std::sin(lambda * t));
}

/// Exact semi-Markov propagator from the phase-extended Markov generator on
/// (stage, operator) space, by one dense exponential.
///  micromaser: S (x) 1 + 1 (x) L_F + (s alpha) (x) E, read out with alpha
///  collision:  S^T (x) 1 + 1 (x) L_F + (alpha^T s^T) (x) E, read out with 1
inline Matrix extended_oracle(const oqs::PhaseTypeWTD& w, const Matrix& e, const Matrix& lf,
                              bool collision, double t) {
  const Index m = w.stages();
  const Index d2 = lf.rows();
  const Matrix s = w.generator().cast<Complex>();
  const Matrix exit = w.exit_rates().cast<Complex>();
  const Matrix alpha = w.alpha().cast<Complex>();
  const Matrix id_m = Matrix::Identity(m, m);
  const Matrix id_o = Matrix::Identity(d2, d2);
  Matrix a;
  Matrix in(m * d2, d2), out(d2, m * d2);
  if (!collision) {
    a = kron(s, id_o) + kron(id_m, lf) + kron(Matrix(exit * alpha.transpose()), e);
    in = kron(Matrix::Ones(m, 1), id_o);
    out = kron(Matrix(alpha.transpose()), id_o);
  } else {
    a = kron(Matrix(s.transpose()), id_o) + kron(id_m, lf) +
        kron(Matrix(alpha * exit.transpose()), e);
    in = kron(alpha, id_o);
    out = kron(Matrix::Ones(1, m), id_o);
  }
  return out * expm(Matrix(t * a)) * in;
}

inline Vector vec_of(const Matrix& a) { return Eigen::Map<const Vector>(a.data(), a.size()); }
inline Matrix unvec_of(const Vector& v, Index d) { return Eigen::Map<const Matrix>(v.data(), d, d); }

}  // namespace testing
