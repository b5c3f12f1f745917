#include "oqs/phase_type.hpp"

#include "oqs/linalg.hpp"

#include <Eigen/LU>

namespace oqs {

double uniform01(Rng& rng) { return double(rng() >> 11) * 0x1.0p-53; }

PhaseTypeWTD::PhaseTypeWTD(RealVector alpha, RealMatrix s) : alpha_(std::move(alpha)), s_(std::move(s)) {
  const Index m = alpha_.size();
  if (m == 0) throw InvalidInput("phase-type: no stages");
  if (s_.rows() != m || s_.cols() != m) throw InvalidInput("phase-type: S must be m x m");
  for (Index i = 0; i < m; ++i) {
    if (alpha_(i) < -1e-12) throw InvalidInput("phase-type: negative initial probability");
    if (s_(i, i) > 0) throw InvalidInput("phase-type: positive diagonal entry in S");
    for (Index j = 0; j < m; ++j)
      if (i != j && s_(i, j) < 0) throw InvalidInput("phase-type: negative off-diagonal entry in S");
    if (s_.row(i).sum() > 1e-12) throw InvalidInput("phase-type: positive row sum in S");
  }
  if (std::abs(alpha_.sum() - 1.0) > 1e-10)
    throw InvalidInput("phase-type: initial probabilities sum to " + std::to_string(alpha_.sum()));
  Eigen::FullPivLU<RealMatrix> lu(s_);
  if (!lu.isInvertible()) throw InvalidInput("phase-type: S is singular (absorption not certain)");
  exit_ = -s_.rowwise().sum();
}

double PhaseTypeWTD::density(double t) const {
  if (t < 0) return 0.0;
  return alpha_.dot(matrix_exp(RealMatrix(t * s_)) * exit_);
}

double PhaseTypeWTD::survival(double t) const {
  if (t < 0) return 1.0;
  return alpha_.dot(matrix_exp(RealMatrix(t * s_)) * RealVector::Ones(stages()));
}

Complex PhaseTypeWTD::laplace(Complex u) const {
  const Matrix a = u * Matrix::Identity(stages(), stages()) - s_.cast<Complex>();
  const Vector x = a.partialPivLu().solve(exit_.cast<Complex>());
  return alpha_.cast<Complex>().dot(x);
}

Complex PhaseTypeWTD::survival_laplace(Complex u) const {
  const Matrix a = u * Matrix::Identity(stages(), stages()) - s_.cast<Complex>();
  const Vector x = a.partialPivLu().solve(Vector::Ones(stages()));
  return alpha_.cast<Complex>().dot(x);
}

double PhaseTypeWTD::density_at_zero() const { return alpha_.dot(exit_); }

double PhaseTypeWTD::density_slope_at_zero() const { return alpha_.dot(s_ * exit_); }

double PhaseTypeWTD::mean() const {
  return alpha_.dot((-s_).partialPivLu().solve(RealVector::Ones(stages())));
}

double PhaseTypeWTD::sample(Rng& rng) const {
  const Index m = stages();
  Index stage = m - 1;
  double u = uniform01(rng), acc = 0;
  for (Index i = 0; i < m; ++i) {
    acc += alpha_(i);
    if (u < acc) {
      stage = i;
      break;
    }
  }
  double t = 0;
  for (;;) {
    const double rate = -s_(stage, stage);
    t += -std::log1p(-uniform01(rng)) / rate;
    u = uniform01(rng) * rate;
    acc = exit_(stage);
    if (u < acc) return t;
    Index next = stage;
    for (Index j = 0; j < m; ++j) {
      if (j == stage) continue;
      acc += s_(stage, j);
      next = j;
      if (u < acc) break;
    }
    stage = next;
  }
}

bool PhaseTypeWTD::same_as(const PhaseTypeWTD& other, double tol) const {
  return stages() == other.stages() && (alpha_ - other.alpha_).cwiseAbs().maxCoeff() <= tol &&
         (s_ - other.s_).cwiseAbs().maxCoeff() <= tol;
}

namespace wtd {

PhaseTypeWTD exponential(double rate) {
  if (!(rate > 0)) throw InvalidInput("exponential: rate must be positive");
  return PhaseTypeWTD(RealVector::Ones(1), RealMatrix::Constant(1, 1, -rate));
}

PhaseTypeWTD erlang(int k, double rate) {
  if (k < 1) throw InvalidInput("erlang: need at least one stage");
  if (!(rate > 0)) throw InvalidInput("erlang: rate must be positive");
  RealVector a = RealVector::Zero(k);
  a(0) = 1.0;
  RealMatrix s = RealMatrix::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    s(i, i) = -rate;
    if (i + 1 < k) s(i, i + 1) = rate;
  }
  return PhaseTypeWTD(a, s);
}

PhaseTypeWTD hyperexponential(const std::vector<double>& weights, const std::vector<double>& rates) {
  if (weights.empty() || weights.size() != rates.size())
    throw InvalidInput("hyperexponential: weights and rates must have equal nonzero length");
  const Index m = static_cast<Index>(weights.size());
  RealVector a(m);
  RealMatrix s = RealMatrix::Zero(m, m);
  for (Index i = 0; i < m; ++i) {
    if (!(rates[i] > 0)) throw InvalidInput("hyperexponential: rates must be positive");
    if (weights[i] < 0) throw InvalidInput("hyperexponential: negative weight");
    a(i) = weights[i];
    s(i, i) = -rates[i];
  }
  if (std::abs(a.sum() - 1.0) > 1e-12) throw InvalidInput("hyperexponential: weights must sum to 1");
  return PhaseTypeWTD(a, s);
}

PhaseTypeWTD convolution(const PhaseTypeWTD& a, const PhaseTypeWTD& b) {
  const Index ma = a.stages(), mb = b.stages();
  RealVector alpha = RealVector::Zero(ma + mb);
  alpha.head(ma) = a.alpha();
  RealMatrix s = RealMatrix::Zero(ma + mb, ma + mb);
  s.topLeftCorner(ma, ma) = a.generator();
  s.topRightCorner(ma, mb) = a.exit_rates() * b.alpha().transpose();
  s.bottomRightCorner(mb, mb) = b.generator();
  return PhaseTypeWTD(alpha, s);
}

PhaseTypeWTD mixture(double w, const PhaseTypeWTD& a, const PhaseTypeWTD& b) {
  if (w < 0 || w > 1) throw InvalidInput("mixture: weight must lie in [0, 1]");
  const Index ma = a.stages(), mb = b.stages();
  RealVector alpha(ma + mb);
  alpha << w * a.alpha(), (1.0 - w) * b.alpha();
  RealMatrix s = RealMatrix::Zero(ma + mb, ma + mb);
  s.topLeftCorner(ma, ma) = a.generator();
  s.bottomRightCorner(mb, mb) = b.generator();
  return PhaseTypeWTD(alpha, s);
}

}  // namespace wtd

}  // namespace oqs
