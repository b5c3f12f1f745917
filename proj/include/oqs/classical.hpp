// Classical semi-Markov jump processes on n sites and their diagonal
// embedding into the quantum semi-Markov model.
#pragma once

#include "oqs/phase_type.hpp"
#include "oqs/qcore.hpp"
#include "oqs/semimarkov.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace oqs {

/// The embedding needs a single waiting-time density shared by all sites.
class UnsupportedEmbedding : public Error {
 public:
  using Error::Error;
};

/// pi(n, m) is the probability of a jump m -> n; the waiting time at site m
/// has density f_m.
class ClassicalSemiMarkov {
 public:
  /// Throws InvalidInput on negative entries, a column sum off 1 by more
  /// than 1e-12 (the message names the column and its sum), or a wtd count
  /// that differs from the number of sites.
  ClassicalSemiMarkov(RealMatrix pi, std::vector<PhaseTypeWTD> wtds);

  Index sites() const { return pi_.rows(); }
  const RealMatrix& jump_matrix() const { return pi_; }
  const std::vector<PhaseTypeWTD>& wtds() const { return wtds_; }

 private:
  RealMatrix pi_;
  std::vector<PhaseTypeWTD> wtds_;
};

/// Violations of the stochasticity constraint, one message per column.
std::vector<std::string> stochastic_violations(const RealMatrix& pi, double tol = 1e-12);

/// Generator of the (site, stage) Markov chain acting on column occupation
/// vectors; its spectrum holds the poles of P^(u).
RealMatrix classical_extended_generator(const ClassicalSemiMarkov& c);

/// P^(u) = diag(g^) (1 - pi diag(f^))^{-1} P0
Vector classical_laplace(const ClassicalSemiMarkov& c, const RealVector& p0, Complex u);

/// P(t) on the grid by Talbot inversion; P(0) = P0.
std::vector<RealVector> classical_gme_solve(const ClassicalSemiMarkov& c, const RealVector& p0,
                                            std::span<const double> grid, int talbot_nodes = 32);

struct ClassicalMcEstimate {
  std::vector<double> grid;
  std::vector<RealVector> mean;
  /// Bernoulli standard error sqrt(p (1 - p) / n) of each occupation
  std::vector<RealVector> stderr_;
  long n_traj = 0;
};

/// Event-driven simulation; trajectory n draws from make_stream(seed, n).
ClassicalMcEstimate classical_mc(const ClassicalSemiMarkov& c, const RealVector& p0,
                                 std::span<const double> grid, long n_traj, std::uint64_t seed,
                                 int threads = 1);

/// E with Kraus operators sqrt(pi_nm) |n><m|, trivial free evolution and the
/// common waiting time. Throws UnsupportedEmbedding if the f_n differ.
SemiMarkovModel classical_embedding(const ClassicalSemiMarkov& c);

}  // namespace oqs
