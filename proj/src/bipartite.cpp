#include "oqs/bipartite.hpp"

#include <Eigen/Eigenvalues>

namespace oqs {

BipartiteModel::BipartiteModel(Index d_s, Index d_e, HermitianOp h_total, DensityMatrix rho_e,
                               Index max_env_dim)
    : d_s_(d_s), d_e_(d_e), h_(std::move(h_total)), rho_e_(std::move(rho_e)) {
  if (d_s <= 0 || d_e <= 0) throw InvalidInput("bipartite model: dimensions must be positive");
  if (d_e > max_env_dim)
    throw InvalidInput("bipartite model: environment dimension " + std::to_string(d_e) +
                       " exceeds cap " + std::to_string(max_env_dim));
  if (h_.dim() != d_s * d_e) throw InvalidInput("bipartite model: H_total has wrong dimension");
  if (rho_e_.dim() != d_e) throw InvalidInput("bipartite model: rho_E has wrong dimension");
}

Matrix unitary_propagator(const BipartiteModel& m, double t) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.hamiltonian().matrix());
  Vector phases(es.eigenvalues().size());
  for (Index k = 0; k < phases.size(); ++k)
    phases(k) = std::exp(Complex(0, -es.eigenvalues()(k) * t));
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

Matrix joint_state(const BipartiteModel& m, const Matrix& rho_s0, double t) {
  if (rho_s0.rows() != m.dim_system() || rho_s0.cols() != m.dim_system())
    throw InvalidInput("joint_state: system state has wrong dimension");
  const Matrix u = unitary_propagator(m, t);
  return u * tensor(rho_s0, m.environment_state().matrix()) * u.adjoint();
}

Matrix reduced_state(const BipartiteModel& m, const Matrix& rho_s0, double t) {
  return partial_trace(joint_state(m, rho_s0, t), m.dim_system(), m.dim_environment(),
                       Subsystem::system);
}

QuantumMap reduced_map_kraus(const BipartiteModel& m, double t) {
  const Index ds = m.dim_system(), de = m.dim_environment();
  const Matrix u = unitary_propagator(m, t);
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.environment_state().matrix());
  std::vector<Matrix> ops;
  for (Index xi = 0; xi < de; ++xi) {
    const double lambda = es.eigenvalues()(xi);
    if (lambda < 1e-14) continue;
    const Vector phi = es.eigenvectors().col(xi);
    for (Index eta = 0; eta < de; ++eta) {
      Matrix k = Matrix::Zero(ds, ds);
      for (Index a = 0; a < ds; ++a)
        for (Index b = 0; b < ds; ++b)
          for (Index l = 0; l < de; ++l) k(a, b) += u(a * de + eta, b * de + l) * phi(l);
      ops.push_back(std::sqrt(lambda) * k);
    }
  }
  return QuantumMap::from_kraus(std::move(ops));
}

double info_internal(const Matrix& rho1_s, const Matrix& rho2_s) {
  return trace_distance(rho1_s, rho2_s);
}

double info_external(const Matrix& rho1_se, const Matrix& rho2_se, Index d_s, Index d_e) {
  const Matrix s1 = partial_trace(rho1_se, d_s, d_e, Subsystem::system);
  const Matrix s2 = partial_trace(rho2_se, d_s, d_e, Subsystem::system);
  return trace_distance(rho1_se, rho2_se) - trace_distance(s1, s2);
}

BoundReport check_bound(const BipartiteModel& m, const Matrix& rho1_s0, const Matrix& rho2_s0,
                        double s, double t, double slack) {
  if (!(s >= 0)) throw InvalidInput("check_bound: s must be nonnegative");
  if (!(t >= s)) throw InvalidInput("check_bound: requires t >= s");
  const Index ds = m.dim_system(), de = m.dim_environment();
  const Matrix se1 = joint_state(m, rho1_s0, s);
  const Matrix se2 = joint_state(m, rho2_s0, s);
  const Matrix s1 = partial_trace(se1, ds, de, Subsystem::system);
  const Matrix s2 = partial_trace(se2, ds, de, Subsystem::system);
  const Matrix e1 = partial_trace(se1, ds, de, Subsystem::environment);
  const Matrix e2 = partial_trace(se2, ds, de, Subsystem::environment);

  BoundReport r;
  r.lhs = trace_distance(reduced_state(m, rho1_s0, t), reduced_state(m, rho2_s0, t)) -
          trace_distance(s1, s2);
  r.rhs_terms = {trace_distance(se1, tensor(s1, e1)), trace_distance(se2, tensor(s2, e2)),
                 trace_distance(e1, e2)};
  r.satisfied = r.lhs <= r.rhs() + slack;
  return r;
}

}  // namespace oqs
