// Exact system + environment dynamics: the joint unitary, reduced states,
// the Kraus form of the reduced map, and the information-flow quantities.
#pragma once

#include "oqs/qcore.hpp"

#include <array>

namespace oqs {

class BipartiteModel {
 public:
  /// Throws InvalidInput if dims do not match or d_E exceeds `max_env_dim`.
  BipartiteModel(Index d_s, Index d_e, HermitianOp h_total, DensityMatrix rho_e,
                 Index max_env_dim = 16);

  Index dim_system() const { return d_s_; }
  Index dim_environment() const { return d_e_; }
  const HermitianOp& hamiltonian() const { return h_; }
  const DensityMatrix& environment_state() const { return rho_e_; }

 private:
  Index d_s_, d_e_;
  HermitianOp h_;
  DensityMatrix rho_e_;
};

/// U(t) = exp(-i H_total t) via the spectral decomposition of H_total.
Matrix unitary_propagator(const BipartiteModel& m, double t);

/// U(t) (rho_S0 (x) rho_E) U(t)^dagger.
Matrix joint_state(const BipartiteModel& m, const Matrix& rho_s0, double t);

/// Tr_E of the joint state.
Matrix reduced_state(const BipartiteModel& m, const Matrix& rho_s0, double t);

/// K_{xi eta} = sqrt(lambda_xi) <eta| U(t) |phi_xi>, with rho_E = sum
/// lambda_xi |phi_xi><phi_xi| and {eta} the computational basis of E.
/// Eigenvalues of rho_E below 1e-14 are dropped.
QuantumMap reduced_map_kraus(const BipartiteModel& m, double t);

double info_internal(const Matrix& rho1_s, const Matrix& rho2_s);
/// D(rho1_SE, rho2_SE) - D(rho1_S, rho2_S) with the S marginals taken from
/// the joint states.
double info_external(const Matrix& rho1_se, const Matrix& rho2_se, Index d_s, Index d_e);

struct BoundReport {
  double lhs = 0;
  /// correlations of state 1, correlations of state 2, environment distance
  std::array<double, 3> rhs_terms{};
  double rhs() const { return rhs_terms[0] + rhs_terms[1] + rhs_terms[2]; }
  bool satisfied = false;
};

/// Information back-flow bound between times s <= t for product initial
/// states rho_S^{1,2}(0) (x) rho_E.
BoundReport check_bound(const BipartiteModel& m, const Matrix& rho1_s0, const Matrix& rho2_s0,
                        double s, double t, double slack = 1e-9);

}  // namespace oqs
