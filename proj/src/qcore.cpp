#include "oqs/qcore.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>

namespace oqs {

RealVector hermitian_eigenvalues(const Matrix& a) {
  if (a.rows() == 2) {
    // closed form keeps the measure optimizers cheap on qubits
    const double p = a(0, 0).real(), q = a(1, 1).real();
    const double mid = 0.5 * (p + q);
    const double rad = std::hypot(0.5 * (p - q), std::abs(a(1, 0)));
    RealVector ev(2);
    ev << mid - rad, mid + rad;
    return ev;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double trace_norm(const Matrix& a) {
  if (a.rows() != a.cols()) throw InvalidInput("trace_norm: matrix is not square");
  const double scale = std::max(1.0, max_abs(a));
  if (hermitian_defect(a) > kStructuralTol * scale)
    throw InvalidInput("trace_norm: operator is not Hermitian");
  if (a.size() == 0) return 0.0;
  return hermitian_eigenvalues(a).cwiseAbs().sum();
}

double trace_norm(const HermitianOp& a) { return trace_norm(a.matrix()); }

StateCheck check_state(const Matrix& rho, const StateTolerance& tol) {
  StateCheck c;
  if (rho.rows() != rho.cols() || rho.rows() == 0) {
    c.hermitian_defect = INFINITY;
    return c;
  }
  c.hermitian_defect = hermitian_defect(rho);
  c.trace_defect = std::abs(rho.trace() - 1.0);
  const Matrix herm = 0.5 * (rho + rho.adjoint());
  c.min_eigenvalue = hermitian_eigenvalues(herm).minCoeff();
  c.valid = c.hermitian_defect <= tol.hermitian && c.trace_defect <= tol.trace &&
            c.min_eigenvalue >= -tol.positivity;
  return c;
}

DensityMatrix::DensityMatrix(Matrix rho, const StateTolerance& tol) : rho_(std::move(rho)) {
  const StateCheck c = check_state(rho_, tol);
  if (!c.valid)
    throw InvalidInput("invalid density matrix (hermitian defect " +
                       std::to_string(c.hermitian_defect) + ", trace defect " +
                       std::to_string(c.trace_defect) + ", min eigenvalue " +
                       std::to_string(c.min_eigenvalue) + ")");
}

DensityMatrix DensityMatrix::pure(const Vector& psi) {
  const double n = psi.norm();
  if (n == 0) throw InvalidInput("pure state from zero vector");
  const Vector v = psi / n;
  return DensityMatrix(v * v.adjoint());
}

DensityMatrix DensityMatrix::basis(Index dim, Index k) {
  if (k < 0 || k >= dim) throw InvalidInput("basis index out of range");
  Matrix rho = Matrix::Zero(dim, dim);
  rho(k, k) = 1.0;
  return DensityMatrix(std::move(rho));
}

DensityMatrix DensityMatrix::maximally_mixed(Index dim) {
  return DensityMatrix(Matrix::Identity(dim, dim) / double(dim));
}

HermitianOp::HermitianOp(Matrix a, double tol) : a_(std::move(a)) {
  if (a_.rows() != a_.cols()) throw InvalidInput("Hermitian operator must be square");
  if (hermitian_defect(a_) > tol) throw InvalidInput("operator is not Hermitian");
}

double trace_distance(const Matrix& rho, const Matrix& sigma) {
  if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols())
    throw InvalidInput("trace_distance: dimension mismatch");
  return 0.5 * trace_norm(Matrix(rho - sigma));
}

double helstrom_norm(const Matrix& rho1, const Matrix& rho2, double p1, double p2) {
  if (p1 < 0 || p2 < 0 || std::abs(p1 + p2 - 1.0) > kStructuralTol)
    throw InvalidInput("helstrom_norm: weights must be nonnegative and sum to 1");
  if (rho1.rows() != rho2.rows() || rho1.cols() != rho2.cols())
    throw InvalidInput("helstrom_norm: dimension mismatch");
  if (p1 == 0.5 && p2 == 0.5) return trace_distance(rho1, rho2);
  return trace_norm(Matrix(p1 * rho1 - p2 * rho2));
}

Matrix partial_trace(const Matrix& rho, Index d_s, Index d_e, Subsystem keep) {
  if (d_s <= 0 || d_e <= 0 || rho.rows() != d_s * d_e || rho.cols() != d_s * d_e)
    throw InvalidInput("partial_trace: dimension does not factor as d_S * d_E");
  if (keep == Subsystem::system) {
    Matrix out = Matrix::Zero(d_s, d_s);
    for (Index a = 0; a < d_s; ++a)
      for (Index b = 0; b < d_s; ++b)
        for (Index k = 0; k < d_e; ++k) out(a, b) += rho(a * d_e + k, b * d_e + k);
    return out;
  }
  Matrix out = Matrix::Zero(d_e, d_e);
  for (Index k = 0; k < d_e; ++k)
    for (Index l = 0; l < d_e; ++l)
      for (Index a = 0; a < d_s; ++a) out(k, l) += rho(a * d_e + k, a * d_e + l);
  return out;
}

// ---------------------------------------------------------------------------
// QuantumMap

QuantumMap QuantumMap::from_kraus(std::vector<Matrix> ops) {
  if (ops.empty()) throw InvalidInput("Kraus list is empty");
  const Index dout = ops.front().rows(), din = ops.front().cols();
  for (const auto& k : ops)
    if (k.rows() != dout || k.cols() != din)
      throw InvalidInput("Kraus operators have inconsistent shapes");
  return QuantumMap(Kraus{std::move(ops)}, din, dout);
}

QuantumMap QuantumMap::from_superoperator(Matrix s, Index dim_in, Index dim_out) {
  if (s.rows() != dim_out * dim_out || s.cols() != dim_in * dim_in)
    throw InvalidInput("superoperator shape does not match dimensions");
  return QuantumMap(Super{std::move(s)}, dim_in, dim_out);
}

QuantumMap QuantumMap::from_superoperator(Matrix s) {
  const auto din = static_cast<Index>(std::lround(std::sqrt(double(s.cols()))));
  const auto dout = static_cast<Index>(std::lround(std::sqrt(double(s.rows()))));
  return from_superoperator(std::move(s), din, dout);
}

QuantumMap QuantumMap::from_choi(Matrix c, Index dim_in, Index dim_out) {
  if (c.rows() != dim_in * dim_out || c.cols() != dim_in * dim_out)
    throw InvalidInput("Choi matrix shape does not match dimensions");
  return QuantumMap(Choi{std::move(c)}, dim_in, dim_out);
}

QuantumMap QuantumMap::identity(Index dim) { return from_kraus({Matrix::Identity(dim, dim)}); }

QuantumMap QuantumMap::unitary(const Matrix& u) { return from_kraus({u}); }

Representation QuantumMap::representation() const {
  switch (rep_.index()) {
    case 0: return Representation::kraus;
    case 1: return Representation::superoperator;
    default: return Representation::choi;
  }
}

const std::vector<Matrix>& QuantumMap::kraus_ops() const {
  if (const auto* k = std::get_if<Kraus>(&rep_)) return k->ops;
  throw InvalidInput("map is not stored in Kraus form");
}

const Matrix& QuantumMap::matrix() const {
  if (const auto* s = std::get_if<Super>(&rep_)) return s->s;
  if (const auto* c = std::get_if<Choi>(&rep_)) return c->c;
  throw InvalidInput("map is stored in Kraus form");
}

Matrix kraus_to_superoperator(const std::vector<Matrix>& ops) {
  const Index dout = ops.front().rows(), din = ops.front().cols();
  Matrix s = Matrix::Zero(dout * dout, din * din);
  // vec(K rho K^dagger) = (conj(K) (x) K) vec(rho)
  for (const auto& k : ops) s += tensor(k.conjugate(), k);
  return s;
}

Matrix superoperator_to_choi(const Matrix& s, Index din, Index dout) {
  Matrix c(din * dout, din * dout);
  for (Index i = 0; i < din; ++i)
    for (Index j = 0; j < din; ++j)
      for (Index a = 0; a < dout; ++a)
        for (Index b = 0; b < dout; ++b)
          c(i * dout + a, j * dout + b) = s(a + dout * b, i + din * j);
  return c;
}

Matrix choi_to_superoperator(const Matrix& c, Index din, Index dout) {
  Matrix s(dout * dout, din * din);
  for (Index i = 0; i < din; ++i)
    for (Index j = 0; j < din; ++j)
      for (Index a = 0; a < dout; ++a)
        for (Index b = 0; b < dout; ++b)
          s(a + dout * b, i + din * j) = c(i * dout + a, j * dout + b);
  return s;
}

Matrix superoperator(const QuantumMap& m) {
  switch (m.representation()) {
    case Representation::kraus: return kraus_to_superoperator(m.kraus_ops());
    case Representation::superoperator: return m.matrix();
    case Representation::choi: return choi_to_superoperator(m.matrix(), m.dim_in(), m.dim_out());
  }
  return {};
}

Matrix choi(const QuantumMap& m) {
  if (m.representation() == Representation::choi) return m.matrix();
  return superoperator_to_choi(superoperator(m), m.dim_in(), m.dim_out());
}

namespace {

double min_choi_eigenvalue(const Matrix& c) {
  return hermitian_eigenvalues(Matrix(0.5 * (c + c.adjoint()))).minCoeff();
}

}  // namespace

std::vector<Matrix> kraus(const QuantumMap& m, double tol) {
  if (m.representation() == Representation::kraus) return m.kraus_ops();
  const Matrix c = choi(m);
  const Matrix herm = 0.5 * (c + c.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(herm);
  const RealVector& ev = es.eigenvalues();
  if (ev.minCoeff() < -tol) throw NotCompletelyPositive(ev.minCoeff());
  const double cutoff = 1e-14 * std::max(1.0, ev.maxCoeff());
  const Index din = m.dim_in(), dout = m.dim_out();
  std::vector<Matrix> ops;
  for (Index n = ev.size() - 1; n >= 0; --n) {
    if (ev(n) <= cutoff) continue;
    Matrix k(dout, din);
    const double w = std::sqrt(ev(n));
    for (Index i = 0; i < din; ++i)
      for (Index a = 0; a < dout; ++a) k(a, i) = w * es.eigenvectors()(i * dout + a, n);
    ops.push_back(std::move(k));
  }
  if (ops.empty()) ops.push_back(Matrix::Zero(dout, din));
  return ops;
}

QuantumMap map_convert(const QuantumMap& m, Representation target) {
  switch (target) {
    case Representation::kraus: return QuantumMap::from_kraus(kraus(m));
    case Representation::superoperator:
      return QuantumMap::from_superoperator(superoperator(m), m.dim_in(), m.dim_out());
    case Representation::choi: return QuantumMap::from_choi(choi(m), m.dim_in(), m.dim_out());
  }
  return m;
}

CptpReport is_cptp(const QuantumMap& m, double tol) {
  CptpReport r;
  const Matrix c = choi(m);
  r.min_choi_eig = min_choi_eigenvalue(c);
  // sum_k K^dagger K = Tr_out(C)^T, read off the Choi blocks
  const Index din = m.dim_in(), dout = m.dim_out();
  Matrix kk(din, din);
  for (Index i = 0; i < din; ++i)
    for (Index j = 0; j < din; ++j) {
      Complex acc = 0;
      for (Index a = 0; a < dout; ++a) acc += c(i * dout + a, j * dout + a);
      kk(j, i) = acc;
    }
  r.tp_defect = max_abs(kk - Matrix::Identity(din, din));
  r.cp = r.min_choi_eig >= -tol;
  r.tp = r.tp_defect <= tol;
  return r;
}

Matrix apply_map(const QuantumMap& m, const Matrix& rho) {
  if (rho.rows() != m.dim_in() || rho.cols() != m.dim_in())
    throw InvalidInput("apply_map: dimension mismatch");
  switch (m.representation()) {
    case Representation::kraus: {
      Matrix out = Matrix::Zero(m.dim_out(), m.dim_out());
      for (const auto& k : m.kraus_ops()) out.noalias() += k * rho * k.adjoint();
      return out;
    }
    case Representation::superoperator:
      return unvec(m.matrix() * vec(rho), m.dim_out());
    case Representation::choi: {
      const Index dout = m.dim_out();
      Matrix out = Matrix::Zero(dout, dout);
      for (Index i = 0; i < m.dim_in(); ++i)
        for (Index j = 0; j < m.dim_in(); ++j)
          out += rho(i, j) * m.matrix().block(i * dout, j * dout, dout, dout);
      return out;
    }
  }
  return {};
}

QuantumMap compose(const QuantumMap& a, const QuantumMap& b) {
  if (a.dim_in() != b.dim_out()) throw InvalidInput("compose: dimension mismatch");
  return QuantumMap::from_superoperator(superoperator(a) * superoperator(b), b.dim_in(),
                                        a.dim_out());
}

namespace pauli {

Matrix x() {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

Matrix y() {
  Matrix m(2, 2);
  m << 0, Complex(0, -1), Complex(0, 1), 0;
  return m;
}

Matrix z() {
  Matrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

Matrix lowering() {
  Matrix m(2, 2);
  m << 0, 1, 0, 0;
  return m;
}

}  // namespace pauli

}  // namespace oqs
