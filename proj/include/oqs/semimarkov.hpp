// Quantum semi-Markov dynamics: a CPTP jump E applied at renewal times with
// phase-type waiting-time density f, interleaved with a CPTP semigroup
// F(t) = exp(t L_F). Solvers: Monte Carlo, truncated series, Laplace
// inversion, and the memory-kernel Volterra equation.
#pragma once

#include "oqs/gksl.hpp"
#include "oqs/nonmarkov.hpp"
#include "oqs/phase_type.hpp"
#include "oqs/qcore.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace oqs {

/// Operator ordering of the jump relative to the free evolution.
///  micromaser:  rho^(u) = (1 - (fF)^(u) E)^{-1} (gF)^(u) rho0
///               K^(u)   = (gF)^{-1} (fF) E - ((gF)^{-1} - u)
///  collision:   rho^(u) = (gF)^(u) (1 - E (fF)^(u))^{-1} rho0
///               K^(u)   = E (fF) (gF)^{-1} - ((gF)^{-1} - u)
/// In the time domain, micromaser weights the first interval with the
/// survival g and later ones with f; collision is the renewal order (g on
/// the interval still running at time t). They coincide when E commutes
/// with L_F.
enum class Ordering { micromaser, collision };

class SemiMarkovModel {
 public:
  /// Throws InvalidInput if E is not CPTP (1e-10) or dims disagree.
  SemiMarkovModel(QuantumMap jump, GKSLModel free_evolution, PhaseTypeWTD wtd);

  Index dim() const { return free_.dim(); }
  const QuantumMap& jump() const { return jump_; }
  const GKSLModel& free_evolution() const { return free_; }
  const PhaseTypeWTD& wtd() const { return wtd_; }

  /// Superoperators of E and L_F.
  const Matrix& jump_superoperator() const { return e_; }
  const Matrix& free_generator() const { return lf_; }
  /// S (x) 1 + 1 (x) L_F on (stage, operator) space, stage index major.
  const Matrix& stage_generator() const { return stage_; }

 private:
  QuantumMap jump_;
  GKSLModel free_;
  PhaseTypeWTD wtd_;
  Matrix e_;
  Matrix lf_;
  Matrix stage_;
};

/// The semigroup exp(t L) rewritten as a semi-Markov model: requires
/// sum gamma L^dagger L = lambda 1; then f is exponential(lambda),
/// E = J / lambda and F is the Hamiltonian part.
SemiMarkovModel semigroup_as_semimarkov(const GKSLModel& m);

struct LaplaceBlocks {
  Matrix f_hat;  // (fF)^(u)
  Matrix g_hat;  // (gF)^(u)
};

LaplaceBlocks laplace_blocks(const SemiMarkovModel& m, Complex u);

/// Laplace transform of Phi(t, 0) as a superoperator.
Matrix propagator_laplace(const SemiMarkovModel& m, Ordering ordering, Complex u);

/// Memory kernel K^(u). Both orderings are built from one set of blocks.
Matrix memory_kernel(const SemiMarkovModel& m, Ordering ordering, Complex u);

/// K^(u) - kernel_local_part(m), the transform of the regular kernel,
/// evaluated without the O(|u|) cancellation in (gF)^{-1} - u:
///  micromaser: (1 + B)^{-1} (C + D E - B K_inf)
///  collision:  (C + E D - K_inf B) (1 + B)^{-1}
/// with B = a 𝕊 (u - 𝕊)^{-1} (1 (x) 1), C = a 𝕊^2 (u - 𝕊)^{-1} (1 (x) 1),
/// D = a 𝕊 (u - 𝕊)^{-1} (s (x) 1), a = alpha (x) 1; all three are O(1/u).
Matrix regular_kernel_laplace(const SemiMarkovModel& m, Ordering ordering, Complex u);

/// lim_{u -> inf} K^(u) = f(0) (E - 1) + L_F: the instantaneous part of the
/// kernel (all of it for exponential f).
Matrix kernel_local_part(const SemiMarkovModel& m);
/// Regular kernel at tau = 0: (f'(0) + f(0)^2) (E - 1).
Matrix kernel_regular_at_zero(const SemiMarkovModel& m);

/// Singularities of the propagator transform (spectrum of the
/// phase-extended generator) and of the kernel transform.
std::vector<Complex> propagator_poles(const SemiMarkovModel& m, Ordering ordering);
std::vector<Complex> kernel_poles(const SemiMarkovModel& m);

struct LaplaceOptions {
  int talbot_nodes = 32;
  Ordering ordering = Ordering::micromaser;
};

/// Phi(t, 0) by Talbot inversion; Phi(0, 0) = 1 exactly.
Matrix laplace_propagator(const SemiMarkovModel& m, double t, const LaplaceOptions& opt = {});
Matrix laplace_solution(const SemiMarkovModel& m, const Matrix& rho0, double t,
                        const LaplaceOptions& opt = {});
DynamicsFamily semimarkov_family(const SemiMarkovModel& m, std::span<const double> grid,
                                 const LaplaceOptions& opt = {});

// ---------------------------------------------------------------------------
// truncated series

struct SeriesOptions {
  int k_max = 20;
  int n_quad = 401;
  Ordering ordering = Ordering::micromaser;
  /// combine step h and h/2 trapezoid results as (4 A_{h/2} - A_h) / 3
  bool richardson = true;
};

struct SeriesPoint {
  double t = 0;
  Matrix rho;
  /// probability of more than k_max renewals by t
  double tail_bound = 0;
};

SeriesPoint series_evaluate(const SemiMarkovModel& m, const Matrix& rho0, double t,
                            const SeriesOptions& opt = {});
/// All nodes t_j = j t_max / (n_quad - 1) from one pass.
std::vector<SeriesPoint> series_trajectory(const SemiMarkovModel& m, const Matrix& rho0,
                                           double t_max, const SeriesOptions& opt = {});

/// P(N(t) = k) for k = 0..k_max of the renewal process with density f.
std::vector<double> renewal_count_probabilities(const PhaseTypeWTD& f, double t, int k_max);

// ---------------------------------------------------------------------------
// Monte Carlo

struct McOptions {
  long n_traj = 10000;
  std::uint64_t seed = 1;
  Ordering ordering = Ordering::micromaser;
  int threads = 1;
};

struct McEstimate {
  std::vector<double> grid;
  std::vector<Matrix> mean;
  /// per-sample covariance of [Re vec(X); Im vec(X)] at each node
  std::vector<RealMatrix> covariance;
  long n_traj = 0;

  /// standard error of the real and imaginary part of each entry
  RealMatrix stderr_real(std::size_t i) const;
  RealMatrix stderr_imag(std::size_t i) const;
  /// delta-method standard error of || mean ||_1
  double trace_norm_stderr(std::size_t i) const;
};

/// Trajectory average of the piecewise dynamics applied to the operator x0
/// (linear, so x0 may be a Helstrom matrix). Trajectory n uses the stream
/// make_stream(seed, n); results do not depend on the thread count.
McEstimate mc_simulate(const SemiMarkovModel& m, const Matrix& x0, std::span<const double> grid,
                       const McOptions& opt = {});

// ---------------------------------------------------------------------------
// memory-kernel master equation

/// K(tau) = local delta(tau) + regular(tau) on a uniform grid of step `step`.
struct SampledKernel {
  double step = 0;
  Matrix local;
  std::vector<Matrix> regular;
};

SampledKernel sample_memory_kernel(const SemiMarkovModel& m, Ordering ordering, double step,
                                   Index n_nodes, int talbot_nodes = 32);

/// d rho / dt = local rho + int_0^t regular(t - tau) rho(tau) dtau by
/// trapezoidal product integration. `grid` must be uniform with the
/// kernel's step and start at 0.
std::vector<Matrix> solve_volterra(const SampledKernel& kernel, const Matrix& rho0,
                                   std::span<const double> grid);

}  // namespace oqs
