#include "oqs/nonmarkov.hpp"

#include "oqs/linalg.hpp"
#include "oqs/parallel.hpp"
#include "oqs/random.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <atomic>
#include <functional>
#include <numbers>
#include <numeric>

namespace oqs {

namespace {

constexpr double kPi = std::numbers::pi;

// Tabulated maps carry roundoff in their Hermiticity preservation; the
// optimizers work on the Hermitian part.
double herm_trace_norm(const Matrix& a) {
  return hermitian_eigenvalues(Matrix(0.5 * (a + a.adjoint()))).cwiseAbs().sum();
}

double herm_min_eig(const Matrix& a) {
  return hermitian_eigenvalues(Matrix(0.5 * (a + a.adjoint()))).minCoeff();
}

/// Pure state from search coordinates: Bloch angles (theta, phi) for qubits,
/// raw real/imaginary parts otherwise.
Vector decode_state(const double* x, Index d) {
  Vector v(d);
  if (d == 2) {
    v(0) = std::cos(0.5 * x[0]);
    v(1) = std::polar(std::sin(0.5 * x[0]), x[1]);
    return v;
  }
  for (Index k = 0; k < d; ++k) v(k) = Complex(x[k], x[d + k]);
  const double n = v.norm();
  if (n < 1e-300) {
    v.setZero();
    v(0) = 1.0;
    return v;
  }
  return v / n;
}

std::vector<double> encode_state(const Vector& psi) {
  const Index d = psi.size();
  if (d == 2) {
    const double theta = 2.0 * std::acos(std::min(1.0, std::abs(psi(0))));
    const double phi = std::arg(psi(1)) - std::arg(psi(0));
    return {theta, phi};
  }
  std::vector<double> x(2 * d);
  for (Index k = 0; k < d; ++k) {
    x[k] = psi(k).real();
    x[d + k] = psi(k).imag();
  }
  return x;
}

Index coords_per_state(Index d) { return d == 2 ? 2 : 2 * d; }

Matrix projector(const Vector& v) { return v * v.adjoint(); }

/// Greedy coordinate pattern search (maximization). Coordinates with a
/// finite bound are clamped; `scale` sets each coordinate's step relative
/// to the shared step.
struct PatternSearch {
  double step;
  double min_step;
  int max_sweeps;

  template <typename Obj>
  long maximize(std::vector<double>& x, double& value, const std::vector<double>& scale,
                const std::vector<std::pair<double, double>>& bounds, Obj&& obj) const {
    long evals = 0;
    double s = step;
    int sweeps = 0;
    while (s >= min_step && sweeps++ < max_sweeps) {
      bool improved = false;
      for (std::size_t k = 0; k < x.size(); ++k) {
        for (double sign : {1.0, -1.0}) {
          std::vector<double> trial = x;
          trial[k] = std::clamp(trial[k] + sign * s * scale[k], bounds[k].first, bounds[k].second);
          if (trial[k] == x[k]) continue;
          const double v = obj(trial);
          ++evals;
          if (v > value + 1e-15) {
            x = std::move(trial);
            value = v;
            improved = true;
            break;
          }
        }
      }
      if (!improved) s *= 0.5;
    }
    return evals;
  }
};

struct Candidate {
  std::vector<double> x;  // two states, then p1 as the last coordinate
  double value = 0;
};

class RevivalObjective {
 public:
  RevivalObjective(const DynamicsFamily& f, double tol) : f_(f), tol_(tol) {}

  Matrix helstrom_matrix(const std::vector<double>& x) const {
    const Index d = f_.dim(), c = coords_per_state(d);
    const Vector a = decode_state(x.data(), d);
    const Vector b = decode_state(x.data() + c, d);
    const double p1 = x.back();
    return p1 * projector(a) - (1.0 - p1) * projector(b);
  }

  std::vector<TrajectoryPoint> trajectory(const Matrix& x0) const {
    const Vector v = vec(x0);
    std::vector<TrajectoryPoint> out(f_.size());
    for (Index i = 0; i < f_.size(); ++i)
      out[i] = {f_.grid()[i], herm_trace_norm(unvec(f_.maps()[i] * v, f_.dim()))};
    return out;
  }

  double operator()(const std::vector<double>& x) const {
    const auto traj = trajectory(helstrom_matrix(x));
    return revival_sum(traj, tol_);
  }

 private:
  const DynamicsFamily& f_;
  double tol_;
};

std::vector<Candidate> base_candidates(Index d, const MeasureOptions& opt) {
  std::vector<Candidate> out;
  if (d == 2) {
    const int nt = std::max(2, opt.theta_points), np = std::max(1, opt.phi_points);
    for (int i = 0; i < nt; ++i) {
      const double theta = kPi * i / double(nt - 1);
      const int nphi = (i == 0 || i == nt - 1) ? 1 : np;
      for (int j = 0; j < nphi; ++j) {
        const double phi = 2.0 * kPi * j / double(np);
        out.push_back({{theta, phi, kPi - theta, phi + kPi, 0.5}, 0});
      }
    }
  } else {
    for (Index i = 0; i < d; ++i)
      for (Index j = i + 1; j < d; ++j) {
        auto x = encode_state(Vector::Unit(d, i));
        auto y = encode_state(Vector::Unit(d, j));
        x.insert(x.end(), y.begin(), y.end());
        x.push_back(0.5);
        out.push_back({std::move(x), 0});
      }
  }
  Rng rng = make_stream(opt.seed, 0);
  for (int r = 0; r < opt.random_pairs; ++r) {
    auto x = encode_state(random_pure_vector(d, rng));
    auto y = encode_state(random_pure_vector(d, rng));
    x.insert(x.end(), y.begin(), y.end());
    x.push_back(0.5);
    out.push_back({std::move(x), 0});
  }
  return out;
}

std::vector<std::size_t> top_indices(const std::vector<Candidate>& c, int k) {
  std::vector<std::size_t> idx(c.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return c[a].value > c[b].value; });
  idx.resize(std::min<std::size_t>(idx.size(), std::max(0, k)));
  return idx;
}

MeasureResult finish(const DynamicsFamily& f, const RevivalObjective& obj, const Candidate& best,
                     long evals, double tol) {
  const Index d = f.dim(), c = coords_per_state(d);
  MeasureResult r;
  r.rho1 = DensityMatrix::pure(decode_state(best.x.data(), d));
  r.rho2 = DensityMatrix::pure(decode_state(best.x.data() + c, d));
  r.p1 = best.x.back();
  r.p2 = 1.0 - r.p1;
  r.trajectory = obj.trajectory(r.p1 * r.rho1.matrix() - r.p2 * r.rho2.matrix());
  r.value = revival_sum(r.trajectory, tol);
  r.revival_intervals = revival_intervals(r.trajectory, tol);
  r.evaluations = evals;
  return r;
}

std::vector<double> state_scales(Index d, bool with_weight) {
  std::vector<double> s(2 * coords_per_state(d), 1.0);
  if (d != 2)
    for (auto& v : s) v = 1.0 / std::sqrt(double(d));
  s.push_back(with_weight ? 0.25 : 0.0);
  return s;
}

std::vector<std::pair<double, double>> state_bounds(Index d) {
  std::vector<std::pair<double, double>> b(2 * coords_per_state(d), {-INFINITY, INFINITY});
  b.emplace_back(0.0, 1.0);
  return b;
}

void refine_all(std::vector<Candidate>& starts, const RevivalObjective& obj, Index d,
                bool with_weight, const MeasureOptions& opt, std::atomic<long>& evals) {
  const PatternSearch search{opt.refine_step, opt.refine_min_step, opt.refine_max_sweeps};
  const auto scale = state_scales(d, with_weight);
  const auto bounds = state_bounds(d);
  parallel_for(static_cast<long>(starts.size()), opt.threads, [&](long i) {
    evals += search.maximize(starts[i].x, starts[i].value, scale, bounds, obj);
  });
}

Candidate best_of(const std::vector<Candidate>& c) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < c.size(); ++i)
    if (c[i].value > c[best].value) best = i;
  return c[best];
}

}  // namespace

std::vector<double> uniform_grid(double t_max, int n_steps) {
  if (n_steps < 1 || !(t_max > 0)) throw InvalidInput("uniform_grid: need t_max > 0, n_steps >= 1");
  std::vector<double> g(n_steps + 1);
  for (int k = 0; k <= n_steps; ++k) g[k] = t_max * k / double(n_steps);
  return g;
}

DynamicsFamily::DynamicsFamily(std::vector<double> grid, std::vector<Matrix> maps, double tol)
    : grid_(std::move(grid)), maps_(std::move(maps)) {
  if (grid_.empty()) throw InvalidInput("dynamics family: empty grid");
  if (grid_.size() != maps_.size())
    throw InvalidInput("dynamics family: grid and map counts differ");
  if (grid_.front() != 0.0) throw InvalidInput("dynamics family: grid must start at t = 0");
  for (std::size_t i = 1; i < grid_.size(); ++i)
    if (!(grid_[i] > grid_[i - 1]))
      throw InvalidInput("dynamics family: grid is not strictly increasing at index " +
                         std::to_string(i));
  const Index d2 = maps_.front().rows();
  dim_ = static_cast<Index>(std::lround(std::sqrt(double(d2))));
  if (dim_ * dim_ != d2) throw InvalidInput("dynamics family: map size is not a square");
  if (max_abs(maps_.front() - Matrix::Identity(d2, d2)) > tol)
    throw InvalidInput("dynamics family: Phi(0, 0) is not the identity");
  for (std::size_t i = 0; i < maps_.size(); ++i) {
    if (maps_[i].rows() != d2 || maps_[i].cols() != d2)
      throw InvalidInput("dynamics family: map " + std::to_string(i) + " has wrong shape");
    const CptpReport r = is_cptp(QuantumMap::from_superoperator(maps_[i], dim_, dim_), tol);
    if (!r.cp || !r.tp)
      throw InvalidInput("dynamics family: map " + std::to_string(i) +
                         " is not CPTP (min Choi eigenvalue " + std::to_string(r.min_choi_eig) +
                         ", TP defect " + std::to_string(r.tp_defect) + ")");
  }
}

DynamicsFamily semigroup_family(const GKSLModel& m, std::span<const double> grid) {
  std::vector<Matrix> maps;
  maps.reserve(grid.size());
  const Matrix l = lindblad_superoperator(m);
  for (double t : grid) maps.push_back(matrix_exp(t * l));
  return DynamicsFamily(std::vector<double>(grid.begin(), grid.end()), std::move(maps));
}

DynamicsFamily conjugate_family(const DynamicsFamily& f, const Matrix& u) {
  const Matrix su = kraus_to_superoperator({u});
  std::vector<Matrix> maps;
  for (Index i = 0; i < f.size(); ++i) maps.push_back(i == 0 ? f.maps()[0] : Matrix(su * f.maps()[i]));
  return DynamicsFamily(f.grid(), std::move(maps));
}

std::vector<TrajectoryPoint> distinguishability_trajectory(const DynamicsFamily& f,
                                                           const Matrix& rho1, const Matrix& rho2,
                                                           double p1, double p2) {
  if (rho1.rows() != f.dim() || rho2.rows() != f.dim())
    throw InvalidInput("distinguishability_trajectory: dimension mismatch");
  if (p1 < 0 || p2 < 0 || std::abs(p1 + p2 - 1.0) > kStructuralTol)
    throw InvalidInput("distinguishability_trajectory: invalid weights");
  const Vector v = vec(Matrix(p1 * rho1 - p2 * rho2));
  std::vector<TrajectoryPoint> out(f.size());
  for (Index i = 0; i < f.size(); ++i)
    out[i] = {f.grid()[i], herm_trace_norm(unvec(f.maps()[i] * v, f.dim()))};
  return out;
}

double revival_sum(std::span<const TrajectoryPoint> traj, double tol) {
  double s = 0;
  for (std::size_t i = 1; i < traj.size(); ++i) {
    const double inc = traj[i].value - traj[i - 1].value;
    if (inc > tol) s += inc;
  }
  return s;
}

std::vector<std::pair<double, double>> revival_intervals(std::span<const TrajectoryPoint> traj,
                                                         double tol) {
  std::vector<std::pair<double, double>> out;
  bool open = false;
  for (std::size_t i = 1; i < traj.size(); ++i) {
    const bool up = traj[i].value - traj[i - 1].value > tol;
    if (up && !open) {
      out.emplace_back(traj[i - 1].t, traj[i].t);
      open = true;
    } else if (up) {
      out.back().second = traj[i].t;
    } else {
      open = false;
    }
  }
  return out;
}

MeasureResult blp_measure(const DynamicsFamily& f, const MeasureOptions& opt) {
  if (f.size() < 1) throw InvalidInput("blp_measure: empty grid");
  const Index d = f.dim();
  const RevivalObjective obj(f, opt.revival_tol);
  std::vector<Candidate> cands = base_candidates(d, opt);
  parallel_for(static_cast<long>(cands.size()), opt.threads,
               [&](long i) { cands[i].value = obj(cands[i].x); });
  std::atomic<long> evals = static_cast<long>(cands.size());

  std::vector<Candidate> starts;
  for (auto i : top_indices(cands, opt.refine_starts)) starts.push_back(cands[i]);
  refine_all(starts, obj, d, false, opt, evals);
  starts.insert(starts.begin(), cands[top_indices(cands, 1).front()]);
  return finish(f, obj, best_of(starts), evals.load(), opt.revival_tol);
}

MeasureResult helstrom_measure(const DynamicsFamily& f, const MeasureOptions& opt) {
  if (f.size() < 1) throw InvalidInput("helstrom_measure: empty grid");
  const Index d = f.dim();
  const RevivalObjective obj(f, opt.revival_tol);
  const MeasureResult blp = blp_measure(f, opt);

  const std::vector<Candidate> base = base_candidates(d, opt);
  const int nw = std::max(2, opt.weight_points);
  std::vector<Candidate> cands;
  cands.reserve(base.size() * nw);
  for (int w = 0; w < nw; ++w)
    for (const auto& c : base) {
      Candidate k = c;
      k.x.back() = w / double(nw - 1);
      cands.push_back(std::move(k));
    }
  parallel_for(static_cast<long>(cands.size()), opt.threads,
               [&](long i) { cands[i].value = obj(cands[i].x); });
  std::atomic<long> evals = blp.evaluations + static_cast<long>(cands.size());

  // incumbent: the trace-distance optimum at p1 = 1/2
  Candidate incumbent;
  {
    Eigen::SelfAdjointEigenSolver<Matrix> e1(blp.rho1.matrix()), e2(blp.rho2.matrix());
    auto x = encode_state(e1.eigenvectors().col(d - 1));
    auto y = encode_state(e2.eigenvectors().col(d - 1));
    x.insert(x.end(), y.begin(), y.end());
    x.push_back(0.5);
    incumbent.x = std::move(x);
    incumbent.value = obj(incumbent.x);
  }

  std::vector<Candidate> starts{incumbent};
  for (auto i : top_indices(cands, opt.refine_starts)) starts.push_back(cands[i]);
  refine_all(starts, obj, d, true, opt, evals);
  return finish(f, obj, best_of(starts), evals.load(), opt.revival_tol);
}

IntermediateMap intermediate_map(const DynamicsFamily& f, Index i, Index j, double max_condition) {
  if (i < 0 || j >= f.size() || j < i) throw InvalidInput("intermediate_map: need 0 <= i <= j < N");
  const Index d = f.dim();
  if (i == j) return {QuantumMap::from_superoperator(Matrix::Identity(d * d, d * d), d, d), 1.0};
  const Matrix& phi_i = f.maps()[i];
  const double cond = i == 0 ? 1.0 : condition_number(phi_i);
  if (!(cond <= max_condition)) throw NonInvertible(cond);
  if (i == 0) return {f.map(j), 1.0};
  // X Phi_i = Phi_j  <=>  Phi_i^T X^T = Phi_j^T
  const Matrix x = phi_i.transpose().partialPivLu().solve(f.maps()[j].transpose()).transpose();
  return {QuantumMap::from_superoperator(x, d, d), cond};
}

CpDivisibilityReport check_cp_divisible(const DynamicsFamily& f, double tol, double max_condition) {
  CpDivisibilityReport r;
  for (Index i = 0; i + 1 < f.size(); ++i) {
    const IntermediateMap im = intermediate_map(f, i, i + 1, max_condition);
    const double e = is_cptp(im.map, tol).min_choi_eig;
    r.min_choi_eigs.push_back(e);
    if (r.min_choi_eigs.size() == 1 || e < r.worst_min_choi_eig) {
      r.worst_min_choi_eig = e;
      r.worst_step = i;
    }
  }
  r.divisible = r.min_choi_eigs.empty() || r.worst_min_choi_eig >= -tol;
  return r;
}

namespace {

/// Best value of `obj` (maximized) over the starting states plus a pattern
/// refinement of the best three.
template <typename Obj>
std::pair<double, Vector> search_pure_states(Index d, const std::vector<Vector>& starts, Obj&& obj) {
  std::vector<Candidate> c;
  c.reserve(starts.size());
  for (const auto& v : starts) {
    Candidate k{encode_state(v), 0};
    k.value = obj(k.x);
    c.push_back(std::move(k));
  }
  std::vector<Candidate> best;
  for (auto i : top_indices(c, 3)) best.push_back(c[i]);
  const PatternSearch search{0.1, 1e-7, 2000};
  std::vector<double> scale(best.front().x.size(), d == 2 ? 1.0 : 1.0 / std::sqrt(double(d)));
  std::vector<std::pair<double, double>> bounds(scale.size(), {-INFINITY, INFINITY});
  for (auto& b : best) search.maximize(b.x, b.value, scale, bounds, obj);
  const Candidate top = best_of(best);
  return {top.value, decode_state(top.x.data(), d)};
}

std::vector<Vector> bloch_grid() {
  std::vector<Vector> out;
  const int nt = 19, np = 36;
  for (int i = 0; i < nt; ++i) {
    const double theta = kPi * i / double(nt - 1);
    const int nphi = (i == 0 || i == nt - 1) ? 1 : np;
    for (int j = 0; j < nphi; ++j) {
      const double x[2] = {theta, 2.0 * kPi * j / double(np)};
      out.push_back(decode_state(x, 2));
    }
  }
  return out;
}

double helstrom_excess(const Matrix& s, Index d, int n_samples, std::uint64_t seed, Vector* arg) {
  Rng rng = make_stream(seed, 1);
  std::vector<Vector> starts;
  for (int k = 0; k < std::max(1, n_samples); ++k) starts.push_back(random_pure_vector(d, rng));
  auto obj = [&](const std::vector<double>& x) {
    const Vector v = decode_state(x.data(), d);
    return herm_trace_norm(unvec(s * vec(projector(v)), d)) - 1.0;
  };
  auto [value, psi] = search_pure_states(d, starts, obj);
  if (arg) *arg = psi;
  return value;
}

}  // namespace

PositivityResult positivity_check(const QuantumMap& m, int n_samples, std::uint64_t seed) {
  if (m.dim_in() != m.dim_out()) throw InvalidInput("positivity_check: map must be square");
  const Index d = m.dim_in();
  const Matrix s = superoperator(m);
  std::vector<Vector> starts;
  if (d == 2) {
    starts = bloch_grid();
  } else {
    for (Index k = 0; k < d; ++k) starts.push_back(Vector::Unit(d, k));
    Rng rng = make_stream(seed, 0);
    for (int k = 0; k < n_samples; ++k) starts.push_back(random_pure_vector(d, rng));
  }
  auto obj = [&](const std::vector<double>& x) {
    const Vector v = decode_state(x.data(), d);
    return -herm_min_eig(unvec(s * vec(projector(v)), d));
  };
  auto [neg_min, psi] = search_pure_states(d, starts, obj);
  return {-neg_min, psi, d == 2};
}

PDivisibilityReport check_p_divisible(const DynamicsFamily& f, double tol, int n_samples,
                                      const PDivisibilityOptions& opt) {
  PDivisibilityReport r;
  const Index d = f.dim();
  const Index steps = std::max<Index>(0, f.size() - 1);
  std::vector<Matrix> inter(steps);
  for (Index i = 0; i < steps; ++i)
    inter[i] = superoperator(intermediate_map(f, i, i + 1, opt.max_condition).map);

  r.min_output_eigs.assign(steps, 0.0);
  r.helstrom_excess.assign(steps, 0.0);
  std::vector<Vector> witness_state(steps);
  parallel_for(static_cast<long>(steps), opt.threads, [&](long i) {
    const QuantumMap m = QuantumMap::from_superoperator(inter[i], d, d);
    r.min_output_eigs[i] = positivity_check(m, n_samples, opt.seed + 2 * i).min_output_eig;
    r.helstrom_excess[i] = helstrom_excess(inter[i], d, n_samples, opt.seed + 2 * i + 1,
                                           &witness_state[i]);
  });

  r.exhaustive = d == 2;
  Index worst_excess = 0;
  for (Index i = 0; i < steps; ++i) {
    if (i == 0 || r.min_output_eigs[i] < r.worst_min_eig) {
      r.worst_min_eig = r.min_output_eigs[i];
      r.worst_step = i;
    }
    if (r.helstrom_excess[i] > r.helstrom_excess[worst_excess]) worst_excess = i;
  }
  r.divisible = steps == 0 || r.worst_min_eig >= -tol;
  r.helstrom_monotone = steps == 0 || r.helstrom_excess[worst_excess] <= 2.0 * tol;
  r.cross_check_agrees = r.divisible == r.helstrom_monotone;

  if (!r.helstrom_monotone) {
    // pull the violating pure state back to an initial Helstrom pair
    const Index i = worst_excess;
    const Matrix p = projector(witness_state[i]);
    const Matrix x0 = unvec(f.maps()[i].partialPivLu().solve(vec(p)), d);
    Eigen::SelfAdjointEigenSolver<Matrix> es(Matrix(0.5 * (x0 + x0.adjoint())));
    Matrix pos = Matrix::Zero(d, d), neg = Matrix::Zero(d, d);
    for (Index k = 0; k < d; ++k) {
      const double l = es.eigenvalues()(k);
      const Matrix proj = projector(es.eigenvectors().col(k));
      if (l > 0) pos += l * proj; else neg -= l * proj;
    }
    const double a = pos.trace().real(), b = neg.trace().real();
    if (a > 0 && b > 0) {
      HelstromWitness w;
      w.step = i;
      w.rho1 = pos / a;
      w.rho2 = neg / b;
      w.p1 = a / (a + b);
      w.p2 = b / (a + b);
      const auto traj = distinguishability_trajectory(f, w.rho1, w.rho2, w.p1, w.p2);
      w.increase = traj[i + 1].value - traj[i].value;
      r.witness = std::move(w);
    }
  }
  return r;
}

}  // namespace oqs
