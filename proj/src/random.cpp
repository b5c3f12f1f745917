#include "oqs/random.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

namespace oqs {

Rng make_stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    0x9e3779b9u};
  return Rng(seq);
}

Matrix ginibre(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix g(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) {
      const double re = n(rng);
      const double im = n(rng);
      g(i, j) = Complex(re, im) / std::sqrt(2.0);
    }
  return g;
}

Vector random_pure_vector(Index dim, Rng& rng) {
  Vector v = ginibre(dim, 1, rng).col(0);
  return v / v.norm();
}

DensityMatrix random_pure_state(Index dim, Rng& rng) {
  return DensityMatrix::pure(random_pure_vector(dim, rng));
}

DensityMatrix random_mixed_state(Index dim, Rng& rng) {
  const Matrix g = ginibre(dim, dim, rng);
  Matrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  rho = 0.5 * (rho + rho.adjoint());
  return DensityMatrix(std::move(rho));
}

Matrix random_unitary(Index dim, Rng& rng) {
  const Matrix g = ginibre(dim, dim, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index k = 0; k < dim; ++k) {
    const Complex d = r(k, k);
    if (std::abs(d) > 0) q.col(k) *= d / std::abs(d);
  }
  return q;
}

Matrix random_hermitian(Index dim, Rng& rng) {
  const Matrix g = ginibre(dim, dim, rng);
  return 0.5 * (g + g.adjoint());
}

QuantumMap random_cptp(Index dim, Index n_kraus, Rng& rng) {
  std::vector<Matrix> ops;
  Matrix sum = Matrix::Zero(dim, dim);
  for (Index k = 0; k < n_kraus; ++k) {
    ops.push_back(ginibre(dim, dim, rng));
    sum += ops.back().adjoint() * ops.back();
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (sum + sum.adjoint()));
  const Matrix inv_sqrt = es.operatorInverseSqrt();
  for (auto& k : ops) k = k * inv_sqrt;
  return QuantumMap::from_kraus(std::move(ops));
}

}  // namespace oqs
