// Dense quantum-information primitives: states, maps, distances, tensor
// structure. Operators are column-major Eigen matrices; vectorization is
// column stacking, so vec(rho) is a plain view of the matrix storage.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace oqs {

using Index = Eigen::Index;
using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline constexpr double kStructuralTol = 1e-12;
inline constexpr double kSpectralTol = 1e-10;

// ---------------------------------------------------------------------------
// errors

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Raised when a Kraus decomposition is requested for a map whose Choi
/// matrix is not positive semidefinite.
class NotCompletelyPositive : public Error {
 public:
  explicit NotCompletelyPositive(double min_eig)
      : Error("map is not completely positive (min Choi eigenvalue " +
              std::to_string(min_eig) + ")"),
        min_choi_eigenvalue(min_eig) {}
  double min_choi_eigenvalue;
};

class NonInvertible : public Error {
 public:
  explicit NonInvertible(double cond)
      : Error("dynamical map is not invertible (condition number " +
              std::to_string(cond) + ")"),
        condition_number(cond) {}
  double condition_number;
};

// ---------------------------------------------------------------------------
// expression-level helpers

template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

/// max |A - A^dagger| entry.
template <typename Derived>
double hermitian_defect(const Eigen::MatrixBase<Derived>& a) {
  if (a.rows() != a.cols()) return INFINITY;
  return max_abs(a - a.adjoint());
}

template <typename Derived>
Vector vec(const Eigen::MatrixBase<Derived>& a) {
  Matrix m = a;
  return Eigen::Map<const Vector>(m.data(), m.size());
}

inline Matrix unvec(const Vector& v, Index rows) {
  return Eigen::Map<const Matrix>(v.data(), rows, v.size() / rows);
}

/// Kronecker product; block (i, j) of the result is a(i, j) * b.
template <typename DA, typename DB>
Matrix tensor(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) =
          Complex(a(i, j)) * b.template cast<Complex>();
  return out;
}

/// Eigenvalues of a Hermitian matrix (lower triangle is read), ascending.
RealVector hermitian_eigenvalues(const Matrix& a);

/// Sum of absolute eigenvalues. Throws InvalidInput if `a` is not Hermitian
/// to 1e-12 relative to its largest entry.
double trace_norm(const Matrix& a);

template <typename Derived>
double trace_norm(const Eigen::MatrixBase<Derived>& a) {
  return trace_norm(Matrix(a));
}

// ---------------------------------------------------------------------------
// states

struct StateCheck {
  double hermitian_defect = 0;
  double trace_defect = 0;
  double min_eigenvalue = 0;
  bool valid = false;
};

struct StateTolerance {
  double hermitian = kStructuralTol;
  double trace = kStructuralTol;
  double positivity = kSpectralTol;
};

StateCheck check_state(const Matrix& rho, const StateTolerance& tol = {});

/// Hermitian, unit-trace, positive semidefinite operator. Validated on
/// construction.
class DensityMatrix {
 public:
  explicit DensityMatrix(Matrix rho, const StateTolerance& tol = {});

  static DensityMatrix pure(const Vector& psi);
  static DensityMatrix basis(Index dim, Index k);
  static DensityMatrix maximally_mixed(Index dim);

  Index dim() const { return rho_.rows(); }
  const Matrix& matrix() const { return rho_; }
  operator const Matrix&() const { return rho_; }

 private:
  Matrix rho_;
};

/// Hermitian operator (observables, Helstrom matrices, Hamiltonians).
class HermitianOp {
 public:
  explicit HermitianOp(Matrix a, double tol = kStructuralTol);
  static HermitianOp zero(Index dim) { return HermitianOp(Matrix::Zero(dim, dim)); }

  Index dim() const { return a_.rows(); }
  const Matrix& matrix() const { return a_; }
  operator const Matrix&() const { return a_; }

 private:
  Matrix a_;
};

double trace_norm(const HermitianOp& a);

/// Half the trace norm of the difference.
double trace_distance(const Matrix& rho, const Matrix& sigma);

/// || p1 rho1 - p2 rho2 ||_1 with p1 + p2 = 1, p1, p2 >= 0.
double helstrom_norm(const Matrix& rho1, const Matrix& rho2, double p1, double p2);

enum class Subsystem { system, environment };

/// Partial trace over a d_S x d_E bipartite operator; `keep` names the
/// factor that survives. Index convention matches `tensor`.
Matrix partial_trace(const Matrix& rho, Index d_s, Index d_e, Subsystem keep);

// ---------------------------------------------------------------------------
// maps

enum class Representation { kraus, superoperator, choi };

/// Linear map on operators. The stored representation is one of
///  - Kraus list {K_k}, dim_out x dim_in each: rho -> sum K rho K^dagger
///  - superoperator S (dim_out^2 x dim_in^2): vec(Phi[rho]) = S vec(rho)
///  - Choi matrix C = sum_ij |i><j| (x) Phi[|i><j|] (unnormalized, trace
///    dim_in for trace-preserving maps).
class QuantumMap {
 public:
  static QuantumMap from_kraus(std::vector<Matrix> ops);
  static QuantumMap from_superoperator(Matrix s, Index dim_in, Index dim_out);
  static QuantumMap from_superoperator(Matrix s);
  static QuantumMap from_choi(Matrix c, Index dim_in, Index dim_out);
  static QuantumMap identity(Index dim);
  static QuantumMap unitary(const Matrix& u);

  Representation representation() const;
  Index dim_in() const { return dim_in_; }
  Index dim_out() const { return dim_out_; }

  /// Kraus operators; throws InvalidInput unless the representation is kraus.
  const std::vector<Matrix>& kraus_ops() const;
  /// Superoperator or Choi matrix of the stored representation.
  const Matrix& matrix() const;

 private:
  struct Kraus {
    std::vector<Matrix> ops;
  };
  struct Super {
    Matrix s;
  };
  struct Choi {
    Matrix c;
  };
  QuantumMap(std::variant<Kraus, Super, Choi> r, Index din, Index dout)
      : rep_(std::move(r)), dim_in_(din), dim_out_(dout) {}

  std::variant<Kraus, Super, Choi> rep_;
  Index dim_in_ = 0;
  Index dim_out_ = 0;
};

Matrix superoperator(const QuantumMap& m);
Matrix choi(const QuantumMap& m);
/// Kraus operators from the Choi eigendecomposition (eigenvalues below
/// 1e-14 of the largest are dropped). Throws NotCompletelyPositive.
std::vector<Matrix> kraus(const QuantumMap& m, double tol = kSpectralTol);

QuantumMap map_convert(const QuantumMap& m, Representation target);

Matrix superoperator_to_choi(const Matrix& s, Index dim_in, Index dim_out);
Matrix choi_to_superoperator(const Matrix& c, Index dim_in, Index dim_out);
Matrix kraus_to_superoperator(const std::vector<Matrix>& ops);

struct CptpReport {
  bool cp = false;
  bool tp = false;
  double min_choi_eig = 0;
  double tp_defect = 0;
};

CptpReport is_cptp(const QuantumMap& m, double tol = kSpectralTol);

Matrix apply_map(const QuantumMap& m, const Matrix& rho);

/// a after b.
QuantumMap compose(const QuantumMap& a, const QuantumMap& b);

// ---------------------------------------------------------------------------
// common operators

namespace pauli {
Matrix x();
Matrix y();
Matrix z();
/// |0><1|; |1> is the excited state.
Matrix lowering();
}  // namespace pauli

}  // namespace oqs
