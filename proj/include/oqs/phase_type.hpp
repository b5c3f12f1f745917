// Phase-type waiting-time distributions: absorption time of a finite Markov
// chain with initial law alpha and sub-generator S.
//
//   f(t) = alpha e^{St} s,   s = -S 1
//   g(t) = alpha e^{St} 1
//   f^(u) = alpha (u - S)^{-1} s
//
// All Laplace objects are rational, which is what lets the semi-Markov
// resolvents be evaluated exactly at complex u.
#pragma once

#include "oqs/qcore.hpp"
#include "oqs/random.hpp"

#include <vector>

namespace oqs {

class PhaseTypeWTD {
 public:
  /// Throws InvalidInput unless alpha is a probability vector and S is a
  /// nonsingular sub-generator (nonpositive diagonal, nonnegative
  /// off-diagonal, row sums <= 0).
  PhaseTypeWTD(RealVector alpha, RealMatrix s);

  Index stages() const { return alpha_.size(); }
  const RealVector& alpha() const { return alpha_; }
  const RealMatrix& generator() const { return s_; }
  /// s = -S 1
  const RealVector& exit_rates() const { return exit_; }

  double density(double t) const;
  double survival(double t) const;
  Complex laplace(Complex u) const;
  Complex survival_laplace(Complex u) const;

  /// f(0) and f'(0); these fix the short-time behavior of memory kernels.
  double density_at_zero() const;
  double density_slope_at_zero() const;
  double mean() const;

  /// Exact draw by simulating the stage chain.
  double sample(Rng& rng) const;

  bool same_as(const PhaseTypeWTD& other, double tol = 1e-12) const;

 private:
  RealVector alpha_;
  RealMatrix s_;
  RealVector exit_;
};

namespace wtd {

PhaseTypeWTD exponential(double rate);
PhaseTypeWTD erlang(int k, double rate);
PhaseTypeWTD hyperexponential(const std::vector<double>& weights, const std::vector<double>& rates);
/// Sum of independent waiting times.
PhaseTypeWTD convolution(const PhaseTypeWTD& a, const PhaseTypeWTD& b);
/// w f_a + (1 - w) f_b
PhaseTypeWTD mixture(double w, const PhaseTypeWTD& a, const PhaseTypeWTD& b);

}  // namespace wtd

/// Uniform double in [0, 1) from the top 53 bits.
double uniform01(Rng& rng);

}  // namespace oqs
