#include "oqs/gksl.hpp"

#include "oqs/linalg.hpp"

namespace oqs {

GKSLModel::GKSLModel(HermitianOp hamiltonian, std::vector<LindbladChannel> channels)
    : h_(std::move(hamiltonian)), channels_(std::move(channels)) {
  for (std::size_t k = 0; k < channels_.size(); ++k) {
    const auto& c = channels_[k];
    if (!(c.gamma >= 0))
      throw InvalidInput("channel " + std::to_string(k) + ": negative rate");
    if (c.op.rows() != dim() || c.op.cols() != dim())
      throw InvalidInput("channel " + std::to_string(k) + ": operator dimension mismatch");
  }
}

GKSLModel GKSLModel::trivial(Index dim) { return GKSLModel(HermitianOp::zero(dim), {}); }

Matrix GKSLModel::decay_operator() const {
  Matrix g = Matrix::Zero(dim(), dim());
  for (const auto& c : channels_) g += c.gamma * c.op.adjoint() * c.op;
  return g;
}

Matrix lindblad_superoperator(const GKSLModel& m) {
  const Index d = m.dim();
  const Matrix id = Matrix::Identity(d, d);
  const Matrix& h = m.hamiltonian().matrix();
  Matrix l = Complex(0, -1) * (tensor(id, h) - tensor(h.transpose(), id));
  for (const auto& c : m.channels()) {
    const Matrix ldl = c.op.adjoint() * c.op;
    l += c.gamma * (tensor(c.op.conjugate(), c.op) - 0.5 * tensor(id, ldl) -
                    0.5 * tensor(ldl.transpose(), id));
  }
  return l;
}

QuantumMap evolve_semigroup(const GKSLModel& m, double t) {
  if (!(t >= 0)) throw InvalidInput("evolve_semigroup: negative time");
  const Index d = m.dim();
  if (t == 0) return QuantumMap::from_superoperator(Matrix::Identity(d * d, d * d), d, d);
  return QuantumMap::from_superoperator(matrix_exp(t * lindblad_superoperator(m)), d, d);
}

Matrix effective_generator(const GKSLModel& m) {
  return Complex(0, -1) * m.hamiltonian().matrix() - 0.5 * m.decay_operator();
}

QuantumMap contraction_semigroup(const GKSLModel& m, double t) {
  if (!(t >= 0)) throw InvalidInput("contraction_semigroup: negative time");
  return QuantumMap::from_kraus({matrix_exp(t * effective_generator(m))});
}

QuantumMap jump_map(const GKSLModel& m) {
  std::vector<Matrix> ops;
  for (const auto& c : m.channels()) ops.push_back(std::sqrt(c.gamma) * c.op);
  if (ops.empty()) ops.push_back(Matrix::Zero(m.dim(), m.dim()));
  return QuantumMap::from_kraus(std::move(ops));
}

Matrix dyson_expansion(const GKSLModel& m, const Matrix& rho0, double t, int k_max, int n_quad) {
  if (!(t >= 0)) throw InvalidInput("dyson_expansion: negative time");
  if (k_max < 0) throw InvalidInput("dyson_expansion: k_max must be nonnegative");
  if (n_quad < 2) throw InvalidInput("dyson_expansion: n_quad must be at least 2");
  if (rho0.rows() != m.dim() || rho0.cols() != m.dim())
    throw InvalidInput("dyson_expansion: dimension mismatch");

  const Index n = n_quad;
  const double h = t / double(n - 1);
  const Matrix g = effective_generator(m);
  const Matrix step = matrix_exp(h * (left_multiplication(g) + right_multiplication(g.adjoint())));
  const Matrix jump = superoperator(jump_map(m));

  // contraction[j] = R(j h); uniform nodes make R(t_j - t_i) = contraction[j - i]
  std::vector<Matrix> contraction(n);
  contraction[0] = Matrix::Identity(step.rows(), step.cols());
  for (Index j = 1; j < n; ++j) contraction[j] = step * contraction[j - 1];

  std::vector<Vector> term(n);
  const Vector v0 = vec(rho0);
  for (Index j = 0; j < n; ++j) term[j] = contraction[j] * v0;
  Vector total = term[n - 1];

  std::vector<Vector> jumped(n), next(n);
  for (int k = 1; k <= k_max; ++k) {
    for (Index i = 0; i < n; ++i) jumped[i] = jump * term[i];
    for (Index j = 0; j < n; ++j) {
      Vector acc = Vector::Zero(v0.size());
      if (j > 0) {
        acc += 0.5 * (contraction[j] * jumped[0] + jumped[j]);
        for (Index i = 1; i < j; ++i) acc += contraction[j - i] * jumped[i];
      }
      next[j] = h * acc;
    }
    std::swap(term, next);
    total += term[n - 1];
  }
  return unvec(total, m.dim());
}

}  // namespace oqs
