// Lindblad generators, semigroup propagation and the jump / no-jump
// decomposition of the semigroup into a Dyson series.
#pragma once

#include "oqs/qcore.hpp"

#include <vector>

namespace oqs {

struct LindbladChannel {
  double gamma = 0;
  Matrix op;
};

/// H plus decay channels (gamma_k, L_k). hbar = 1.
class GKSLModel {
 public:
  GKSLModel(HermitianOp hamiltonian, std::vector<LindbladChannel> channels);
  /// H = 0, no channels.
  static GKSLModel trivial(Index dim);

  Index dim() const { return h_.dim(); }
  const HermitianOp& hamiltonian() const { return h_; }
  const std::vector<LindbladChannel>& channels() const { return channels_; }

  /// sum_k gamma_k L_k^dagger L_k
  Matrix decay_operator() const;

 private:
  HermitianOp h_;
  std::vector<LindbladChannel> channels_;
};

/// Superoperator of rho -> -i[H, rho] + sum_k gamma_k (L rho L^dagger - 1/2 {L^dagger L, rho}).
Matrix lindblad_superoperator(const GKSLModel& m);

/// exp(t L) as a superoperator map. Throws InvalidInput for t < 0.
QuantumMap evolve_semigroup(const GKSLModel& m, double t);

/// Non-Hermitian effective generator G = -iH - 1/2 sum gamma L^dagger L.
Matrix effective_generator(const GKSLModel& m);

/// R(t)[rho] = e^{Gt} rho e^{G^dagger t}, returned as a single Kraus operator.
QuantumMap contraction_semigroup(const GKSLModel& m, double t);

/// J[rho] = sum gamma_k L_k rho L_k^dagger.
QuantumMap jump_map(const GKSLModel& m);

/// R(t) rho0 plus the first k_max jump insertions, each time-ordered
/// integral evaluated by nested trapezoid rules on n_quad uniform nodes.
Matrix dyson_expansion(const GKSLModel& m, const Matrix& rho0, double t, int k_max, int n_quad);

}  // namespace oqs
