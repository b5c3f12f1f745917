#include "oqs/semimarkov.hpp"

#include "oqs/laplace.hpp"
#include "oqs/linalg.hpp"
#include "oqs/parallel.hpp"
#include "oqs/random.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>

namespace oqs {

namespace {

Matrix super_identity(Index d) { return Matrix::Identity(d * d, d * d); }

void require_time(double t, const char* who) {
  if (!(t >= 0) || !std::isfinite(t)) throw InvalidInput(std::string(who) + ": t must be finite and >= 0");
}

void require_grid(std::span<const double> grid, const char* who) {
  if (grid.empty()) throw InvalidInput(std::string(who) + ": empty grid");
  if (!(grid[0] >= 0)) throw InvalidInput(std::string(who) + ": grid must start at t >= 0");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i])) throw InvalidInput(std::string(who) + ": non-finite grid point");
    if (i > 0 && !(grid[i] > grid[i - 1]))
      throw InvalidInput(std::string(who) + ": grid must be strictly increasing");
  }
}

std::vector<Complex> spectrum(const Matrix& a) {
  Eigen::ComplexEigenSolver<Matrix> es(a, false);
  if (es.info() != Eigen::Success) throw Error("eigenvalue computation failed");
  return {es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size()};
}

/// Phase-extended generators whose compressions reproduce the propagator:
///  micromaser: S (x) 1 + 1 (x) L_F + (s alpha) (x) E
///  collision:  S^T (x) 1 + 1 (x) L_F + (alpha^T s^T) (x) E
Matrix extended_generator(const SemiMarkovModel& m, Ordering ordering) {
  const auto& w = m.wtd();
  const Index d2 = m.dim() * m.dim();
  const RealMatrix s = w.generator();
  const RealMatrix jump = w.exit_rates() * w.alpha().transpose();
  const Matrix id_stage = Matrix::Identity(w.stages(), w.stages());
  const Matrix id_op = Matrix::Identity(d2, d2);
  if (ordering == Ordering::micromaser)
    return tensor(s, id_op) + tensor(id_stage, m.free_generator()) +
           tensor(jump, m.jump_superoperator());
  return tensor(RealMatrix(s.transpose()), id_op) + tensor(id_stage, m.free_generator()) +
         tensor(RealMatrix(jump.transpose()), m.jump_superoperator());
}

Matrix solve_checked(const Matrix& a, const Matrix& rhs) {
  Eigen::PartialPivLU<Matrix> lu(a);
  const double rc = lu.rcond();
  if (!(rc > 1e-14)) throw NonInvertible(rc > 0 ? 1.0 / rc : INFINITY);
  return lu.solve(rhs);
}

Matrix propagator_from_blocks(const LaplaceBlocks& b, const Matrix& e, Ordering ordering) {
  const Matrix id = Matrix::Identity(e.rows(), e.cols());
  if (ordering == Ordering::micromaser) return solve_checked(id - b.f_hat * e, b.g_hat);
  // g (1 - E f)^{-1} = ((1 - E f)^{-T} g^T)^T
  return solve_checked((id - e * b.f_hat).transpose(), b.g_hat.transpose()).transpose();
}

Matrix talbot_propagator(const SemiMarkovModel& m, double t, const std::vector<Complex>& poles,
                         const LaplaceOptions& opt) {
  if (t == 0) return super_identity(m.dim());
  check_talbot_poles(poles, t, opt.talbot_nodes);
  return talbot_invert(
      [&](Complex u) {
        return propagator_from_blocks(laplace_blocks(m, u), m.jump_superoperator(), opt.ordering);
      },
      t, opt.talbot_nodes);
}

}  // namespace

SemiMarkovModel::SemiMarkovModel(QuantumMap jump, GKSLModel free_evolution, PhaseTypeWTD wtd)
    : jump_(std::move(jump)), free_(std::move(free_evolution)), wtd_(std::move(wtd)) {
  const Index d = free_.dim();
  if (jump_.dim_in() != d || jump_.dim_out() != d)
    throw InvalidInput("semi-Markov model: jump map dimension " + std::to_string(jump_.dim_in()) +
                       " -> " + std::to_string(jump_.dim_out()) + " does not match dim " +
                       std::to_string(d));
  const CptpReport rep = is_cptp(jump_, 1e-10);
  if (!rep.cp) throw InvalidInput("semi-Markov model: jump map is not completely positive");
  if (!rep.tp) throw InvalidInput("semi-Markov model: jump map is not trace preserving");
  e_ = superoperator(jump_);
  lf_ = lindblad_superoperator(free_);
  stage_ = tensor(wtd_.generator(), Matrix::Identity(d * d, d * d)) +
           tensor(Matrix::Identity(wtd_.stages(), wtd_.stages()), lf_);
}

SemiMarkovModel semigroup_as_semimarkov(const GKSLModel& m) {
  const Index d = m.dim();
  const Matrix gamma = m.decay_operator();
  const double lambda = gamma.trace().real() / static_cast<double>(d);
  if (!(lambda > 0)) throw InvalidInput("semigroup_as_semimarkov: model has no decay");
  if (max_abs(gamma - lambda * Matrix::Identity(d, d)) > 1e-12 * std::max(1.0, lambda))
    throw InvalidInput("semigroup_as_semimarkov: sum gamma L^dagger L is not proportional to 1");
  std::vector<Matrix> ops;
  for (const auto& c : m.channels())
    if (c.gamma > 0) ops.push_back(std::sqrt(c.gamma / lambda) * c.op);
  return SemiMarkovModel(QuantumMap::from_kraus(std::move(ops)), GKSLModel(m.hamiltonian(), {}),
                         wtd::exponential(lambda));
}

LaplaceBlocks laplace_blocks(const SemiMarkovModel& m, Complex u) {
  const auto& w = m.wtd();
  const Index ms = w.stages();
  const Index d2 = m.dim() * m.dim();
  const Index n = ms * d2;
  Matrix rhs = Matrix::Zero(n, 2 * d2);
  for (Index i = 0; i < ms; ++i) {
    rhs.block(i * d2, 0, d2, d2).diagonal().setConstant(w.exit_rates()(i));
    rhs.block(i * d2, d2, d2, d2).diagonal().setOnes();
  }
  Matrix a = -m.stage_generator();
  a.diagonal().array() += u;
  const Matrix x = solve_checked(a, rhs);
  LaplaceBlocks b{Matrix::Zero(d2, d2), Matrix::Zero(d2, d2)};
  for (Index i = 0; i < ms; ++i) {
    const double ai = w.alpha()(i);
    if (ai == 0) continue;
    b.f_hat += ai * x.block(i * d2, 0, d2, d2);
    b.g_hat += ai * x.block(i * d2, d2, d2, d2);
  }
  return b;
}

Matrix propagator_laplace(const SemiMarkovModel& m, Ordering ordering, Complex u) {
  return propagator_from_blocks(laplace_blocks(m, u), m.jump_superoperator(), ordering);
}

namespace {

struct KernelBlocks {
  Matrix b, c, d;
};

KernelBlocks kernel_blocks(const SemiMarkovModel& m, Complex u) {
  const auto& w = m.wtd();
  const Index ms = w.stages();
  const Index d2 = m.dim() * m.dim();
  const Index n = ms * d2;
  Matrix rhs = Matrix::Zero(n, 2 * d2);
  Matrix a = Matrix::Zero(d2, n);
  for (Index i = 0; i < ms; ++i) {
    rhs.block(i * d2, 0, d2, d2).diagonal().setOnes();
    rhs.block(i * d2, d2, d2, d2).diagonal().setConstant(w.exit_rates()(i));
    a.block(0, i * d2, d2, d2).diagonal().setConstant(w.alpha()(i));
  }
  const Matrix& big = m.stage_generator();
  Matrix shifted = -big;
  shifted.diagonal().array() += u;
  const Matrix z = solve_checked(shifted, rhs);
  const Matrix as = a * big;
  const Matrix ass = as * big;
  return {as * z.leftCols(d2), ass * z.leftCols(d2), as * z.rightCols(d2)};
}

}  // namespace

Matrix regular_kernel_laplace(const SemiMarkovModel& m, Ordering ordering, Complex u) {
  const KernelBlocks k = kernel_blocks(m, u);
  const Matrix& e = m.jump_superoperator();
  const Matrix k_inf = kernel_local_part(m);
  Matrix one_b = k.b;
  one_b.diagonal().array() += 1.0;
  if (ordering == Ordering::micromaser)
    return solve_checked(one_b, Matrix(k.c + k.d * e - k.b * k_inf));
  // X (1 + B)^{-1} = ((1 + B)^{-T} X^T)^T
  const Matrix x = k.c + e * k.d - k_inf * k.b;
  return solve_checked(one_b.transpose(), x.transpose()).transpose();
}

Matrix memory_kernel(const SemiMarkovModel& m, Ordering ordering, Complex u) {
  return kernel_local_part(m) + regular_kernel_laplace(m, ordering, u);
}

Matrix kernel_local_part(const SemiMarkovModel& m) {
  const Index d = m.dim();
  return m.wtd().density_at_zero() * (m.jump_superoperator() - super_identity(d)) +
         m.free_generator();
}

Matrix kernel_regular_at_zero(const SemiMarkovModel& m) {
  const double f0 = m.wtd().density_at_zero();
  const double c = m.wtd().density_slope_at_zero() + f0 * f0;
  return c * (m.jump_superoperator() - super_identity(m.dim()));
}

std::vector<Complex> propagator_poles(const SemiMarkovModel& m, Ordering ordering) {
  return spectrum(extended_generator(m, ordering));
}

std::vector<Complex> kernel_poles(const SemiMarkovModel& m) {
  const auto& w = m.wtd();
  const std::vector<Complex> free = spectrum(m.free_generator());
  const std::vector<Complex> stage = spectrum(w.generator().cast<Complex>());
  const RealMatrix renewal = w.generator() + w.exit_rates() * w.alpha().transpose();
  std::vector<Complex> zeros = spectrum(renewal.cast<Complex>());
  // 1 - f^ vanishes at u = 0 and g^ = (1 - f^) / u does not
  auto origin = std::min_element(zeros.begin(), zeros.end(),
                                 [](Complex a, Complex b) { return std::abs(a) < std::abs(b); });
  zeros.erase(origin);
  std::vector<Complex> out;
  for (Complex lf : free) {
    for (Complex s : stage) out.push_back(s + lf);
    for (Complex z : zeros) out.push_back(z + lf);
  }
  return out;
}

Matrix laplace_propagator(const SemiMarkovModel& m, double t, const LaplaceOptions& opt) {
  require_time(t, "laplace_propagator");
  return talbot_propagator(m, t, propagator_poles(m, opt.ordering), opt);
}

Matrix laplace_solution(const SemiMarkovModel& m, const Matrix& rho0, double t,
                        const LaplaceOptions& opt) {
  if (rho0.rows() != m.dim() || rho0.cols() != m.dim())
    throw InvalidInput("laplace_solution: initial state has the wrong dimension");
  if (t == 0) return rho0;
  return unvec(laplace_propagator(m, t, opt) * vec(rho0), m.dim());
}

DynamicsFamily semimarkov_family(const SemiMarkovModel& m, std::span<const double> grid,
                                 const LaplaceOptions& opt) {
  require_grid(grid, "semimarkov_family");
  const std::vector<Complex> poles = propagator_poles(m, opt.ordering);
  std::vector<Matrix> maps;
  maps.reserve(grid.size());
  for (double t : grid) maps.push_back(talbot_propagator(m, t, poles, opt));
  return DynamicsFamily(std::vector<double>(grid.begin(), grid.end()), std::move(maps));
}

// ---------------------------------------------------------------------------
// series

std::vector<double> renewal_count_probabilities(const PhaseTypeWTD& f, double t, int k_max) {
  require_time(t, "renewal_count_probabilities");
  if (k_max < 0) throw InvalidInput("renewal_count_probabilities: k_max must be >= 0");
  const Index ms = f.stages();
  const Index n = ms * (k_max + 1);
  RealMatrix q = RealMatrix::Zero(n, n);
  const RealMatrix renew = f.exit_rates() * f.alpha().transpose();
  for (int k = 0; k <= k_max; ++k) {
    q.block(k * ms, k * ms, ms, ms) = f.generator();
    if (k < k_max) q.block(k * ms, (k + 1) * ms, ms, ms) = renew;
  }
  RealVector p0 = RealVector::Zero(n);
  p0.head(ms) = f.alpha();
  const RealVector p = matrix_exp(RealMatrix(t * q)).transpose() * p0;
  std::vector<double> out(k_max + 1);
  for (int k = 0; k <= k_max; ++k) out[k] = p.segment(k * ms, ms).sum();
  return out;
}

namespace {

/// Sum of the first k_max + 1 terms at the nodes j h, j = 0..n-1, with
/// trapezoidal convolutions.
std::vector<Vector> series_pass(const SemiMarkovModel& m, const Vector& v0, double t_max, int n,
                                int k_max, Ordering ordering) {
  const double h = n > 1 ? t_max / (n - 1) : 0.0;
  const Matrix& e = m.jump_superoperator();
  const Matrix step = matrix_exp(Matrix(h * m.free_generator()));
  std::vector<Matrix> free(n);
  std::vector<double> f(n), g(n);
  for (int j = 0; j < n; ++j) {
    free[j] = j == 0 ? super_identity(m.dim()) : Matrix(free[j - 1] * step);
    f[j] = m.wtd().density(j * h);
    g[j] = m.wtd().survival(j * h);
  }
  auto convolve = [&](const std::vector<Matrix>& kernel, const std::vector<Vector>& x) {
    std::vector<Vector> out(n, Vector::Zero(v0.size()));
    for (int j = 1; j < n; ++j) {
      Vector acc = 0.5 * (kernel[0] * x[j] + kernel[j] * x[0]);
      for (int i = 1; i < j; ++i) acc += kernel[i] * x[j - i];
      out[j] = h * acc;
    }
    return out;
  };
  std::vector<Vector> total(n);
  std::vector<Matrix> survive(n);
  for (int j = 0; j < n; ++j) {
    survive[j] = g[j] * free[j];
    total[j] = survive[j] * v0;
  }
  if (k_max == 0) return total;
  std::vector<Matrix> renew(n);
  if (ordering == Ordering::micromaser) {
    for (int j = 0; j < n; ++j) renew[j] = f[j] * free[j] * e;
    std::vector<Vector> term = total;
    for (int k = 1; k <= k_max; ++k) {
      term = convolve(renew, term);
      for (int j = 0; j < n; ++j) total[j] += term[j];
    }
  } else {
    for (int j = 0; j < n; ++j) renew[j] = f[j] * e * free[j];
    std::vector<Vector> chain(n);
    for (int j = 0; j < n; ++j) chain[j] = renew[j] * v0;
    for (int k = 1; k <= k_max; ++k) {
      if (k > 1) chain = convolve(renew, chain);
      const std::vector<Vector> term = convolve(survive, chain);
      for (int j = 0; j < n; ++j) total[j] += term[j];
    }
  }
  return total;
}

}  // namespace

std::vector<SeriesPoint> series_trajectory(const SemiMarkovModel& m, const Matrix& rho0,
                                           double t_max, const SeriesOptions& opt) {
  require_time(t_max, "series_evaluate");
  if (opt.k_max < 0) throw InvalidInput("series_evaluate: k_max must be >= 0");
  if (opt.n_quad < 2) throw InvalidInput("series_evaluate: n_quad must be >= 2");
  if (rho0.rows() != m.dim() || rho0.cols() != m.dim())
    throw InvalidInput("series_evaluate: initial state has the wrong dimension");
  const int n = opt.n_quad;
  const Vector v0 = vec(rho0);
  std::vector<Vector> coarse = series_pass(m, v0, t_max, n, opt.k_max, opt.ordering);
  if (opt.richardson && t_max > 0) {
    const std::vector<Vector> fine = series_pass(m, v0, t_max, 2 * n - 1, opt.k_max, opt.ordering);
    for (int j = 0; j < n; ++j) coarse[j] = (4.0 * fine[2 * j] - coarse[j]) / 3.0;
  }
  const double h = t_max / (n - 1);
  std::vector<SeriesPoint> out(n);
  for (int j = 0; j < n; ++j) {
    const double t = j == n - 1 ? t_max : j * h;
    const std::vector<double> p = renewal_count_probabilities(m.wtd(), t, opt.k_max);
    double covered = 0;
    for (double x : p) covered += x;
    out[j] = SeriesPoint{t, unvec(coarse[j], m.dim()), std::max(0.0, 1.0 - covered)};
  }
  return out;
}

SeriesPoint series_evaluate(const SemiMarkovModel& m, const Matrix& rho0, double t,
                            const SeriesOptions& opt) {
  return series_trajectory(m, rho0, t, opt).back();
}

// ---------------------------------------------------------------------------
// Monte Carlo

RealMatrix McEstimate::stderr_real(std::size_t i) const {
  const Index d2 = mean.at(i).size();
  const Index d = mean[i].rows();
  RealVector v(d2);
  for (Index k = 0; k < d2; ++k) v(k) = std::sqrt(std::max(0.0, covariance[i](k, k)) / n_traj);
  return Eigen::Map<RealMatrix>(v.data(), d, d);
}

RealMatrix McEstimate::stderr_imag(std::size_t i) const {
  const Index d2 = mean.at(i).size();
  const Index d = mean[i].rows();
  RealVector v(d2);
  for (Index k = 0; k < d2; ++k)
    v(k) = std::sqrt(std::max(0.0, covariance[i](d2 + k, d2 + k)) / n_traj);
  return Eigen::Map<RealMatrix>(v.data(), d, d);
}

double McEstimate::trace_norm_stderr(std::size_t i) const {
  const Matrix x = 0.5 * (mean.at(i) + mean.at(i).adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(x);
  const RealVector sign = es.eigenvalues().unaryExpr([](double l) { return l > 0 ? 1.0 : (l < 0 ? -1.0 : 0.0); });
  const Matrix gt = (es.eigenvectors() * sign.cast<Complex>().asDiagonal() *
                     es.eigenvectors().adjoint()).transpose();
  const Index d2 = x.size();
  RealVector grad(2 * d2);
  for (Index k = 0; k < d2; ++k) {
    grad(k) = gt.data()[k].real();
    grad(d2 + k) = -gt.data()[k].imag();
  }
  return std::sqrt(std::max(0.0, grad.dot(covariance[i] * grad)) / n_traj);
}

namespace {

constexpr long kTrajBlock = 256;
constexpr long kBlocksPerWave = 64;

struct BlockSums {
  std::vector<RealVector> first;
  std::vector<RealMatrix> second;
};

}  // namespace

McEstimate mc_simulate(const SemiMarkovModel& m, const Matrix& x0, std::span<const double> grid,
                       const McOptions& opt) {
  require_grid(grid, "mc_simulate");
  if (opt.n_traj < 1) throw InvalidInput("mc_simulate: n_traj must be >= 1");
  const Index d = m.dim();
  if (x0.rows() != d || x0.cols() != d)
    throw InvalidInput("mc_simulate: initial operator has the wrong dimension");
  const Index d2 = d * d;
  const std::size_t nodes = grid.size();
  const double t_end = grid.back();
  const Matrix& e = m.jump_superoperator();
  const SemigroupPropagator free(m.free_generator());
  const Vector v0 = vec(x0);
  auto evolve = [&](double tau, const Vector& v) { return free.trivial() ? v : free.apply(tau, v); };

  auto run_block = [&](long block, BlockSums& sums) {
    sums.first.assign(nodes, RealVector::Zero(2 * d2));
    sums.second.assign(nodes, RealMatrix::Zero(2 * d2, 2 * d2));
    const long begin = block * kTrajBlock;
    const long end = std::min(opt.n_traj, begin + kTrajBlock);
    std::vector<double> jumps;
    RealVector z(2 * d2);
    for (long traj = begin; traj < end; ++traj) {
      Rng rng = make_stream(opt.seed, static_cast<std::uint64_t>(traj));
      jumps.clear();
      for (double t = m.wtd().sample(rng); t <= t_end; t += m.wtd().sample(rng)) jumps.push_back(t);
      std::size_t k = 0;
      Vector chain = v0;  // collision: state right after the k-th jump
      for (std::size_t node = 0; node < nodes; ++node) {
        const double t = grid[node];
        while (k < jumps.size() && jumps[k] <= t) {
          if (opt.ordering == Ordering::collision)
            chain = e * evolve(jumps[k] - (k == 0 ? 0.0 : jumps[k - 1]), chain);
          ++k;
        }
        const double last = k == 0 ? 0.0 : jumps[k - 1];
        Vector x;
        if (opt.ordering == Ordering::collision) {
          x = evolve(t - last, chain);
        } else {
          x = evolve(t - last, v0);
          double prev = 0;
          for (std::size_t i = 0; i < k; ++i) {
            x = evolve(jumps[i] - prev, e * x);
            prev = jumps[i];
          }
        }
        z.head(d2) = x.real();
        z.tail(d2) = x.imag();
        sums.first[node] += z;
        sums.second[node].selfadjointView<Eigen::Lower>().rankUpdate(z);
      }
    }
  };

  std::vector<RealVector> s1(nodes, RealVector::Zero(2 * d2));
  std::vector<RealMatrix> s2(nodes, RealMatrix::Zero(2 * d2, 2 * d2));
  const long n_blocks = (opt.n_traj + kTrajBlock - 1) / kTrajBlock;
  for (long wave = 0; wave < n_blocks; wave += kBlocksPerWave) {
    const long count = std::min(kBlocksPerWave, n_blocks - wave);
    std::vector<BlockSums> partial(count);
    parallel_for(count, opt.threads, [&](long i) { run_block(wave + i, partial[i]); });
    for (const auto& p : partial)
      for (std::size_t node = 0; node < nodes; ++node) {
        s1[node] += p.first[node];
        s2[node] += p.second[node];
      }
  }

  McEstimate est;
  est.grid.assign(grid.begin(), grid.end());
  est.n_traj = opt.n_traj;
  const double n = static_cast<double>(opt.n_traj);
  for (std::size_t node = 0; node < nodes; ++node) {
    const RealVector mu = s1[node] / n;
    RealMatrix second = s2[node].selfadjointView<Eigen::Lower>();
    RealMatrix cov = RealMatrix::Zero(2 * d2, 2 * d2);
    if (opt.n_traj > 1) cov = (second - n * mu * mu.transpose()) / (n - 1);
    Matrix mean(d, d);
    for (Index k = 0; k < d2; ++k) mean.data()[k] = Complex(mu(k), mu(d2 + k));
    est.mean.push_back(std::move(mean));
    est.covariance.push_back(std::move(cov));
  }
  return est;
}

// ---------------------------------------------------------------------------
// memory kernel in the time domain

SampledKernel sample_memory_kernel(const SemiMarkovModel& m, Ordering ordering, double step,
                                   Index n_nodes, int talbot_nodes) {
  if (!(step > 0)) throw InvalidInput("sample_memory_kernel: step must be positive");
  if (n_nodes < 1) throw InvalidInput("sample_memory_kernel: need at least one node");
  SampledKernel k;
  k.step = step;
  k.local = kernel_local_part(m);
  k.regular.resize(n_nodes);
  k.regular[0] = kernel_regular_at_zero(m);
  const std::vector<Complex> poles = kernel_poles(m);
  for (Index n = 1; n < n_nodes; ++n) {
    const double tau = n * step;
    check_talbot_poles(poles, tau, talbot_nodes);
    k.regular[n] = talbot_invert(
        [&](Complex u) { return regular_kernel_laplace(m, ordering, u); }, tau,
        talbot_nodes);
  }
  return k;
}

std::vector<Matrix> solve_volterra(const SampledKernel& kernel, const Matrix& rho0,
                                   std::span<const double> grid) {
  if (grid.empty()) throw InvalidInput("solve_volterra: empty grid");
  const double h = kernel.step;
  if (!(h > 0)) throw InvalidInput("solve_volterra: kernel step must be positive");
  const Index d = rho0.rows();
  const Index d2 = d * d;
  if (rho0.cols() != d || kernel.local.rows() != d2 || kernel.local.cols() != d2)
    throw InvalidInput("solve_volterra: kernel and state dimensions disagree");
  const std::size_t n = grid.size();
  if (kernel.regular.size() < n)
    throw InvalidInput("solve_volterra: kernel sampled on fewer nodes than the grid");
  const double scale = std::max(1.0, std::abs(grid.back()));
  for (std::size_t i = 0; i < n; ++i)
    if (std::abs(grid[i] - static_cast<double>(i) * h) > 1e-9 * scale)
      throw InvalidInput("solve_volterra: grid must be uniform with the kernel step, starting at 0");

  std::vector<Vector> y(n);
  y[0] = vec(rho0);
  std::vector<Matrix> out(n);
  out[0] = rho0;
  if (n == 1) return out;
  Matrix a = Matrix::Identity(d2, d2) - 0.5 * h * (kernel.local + 0.5 * h * kernel.regular[0]);
  const Eigen::PartialPivLU<Matrix> lu(a);
  Vector rate_prev = kernel.local * y[0];
  for (std::size_t step = 1; step < n; ++step) {
    // memory from nodes 0..step-1, trapezoid weight 1/2 on node 0
    Vector history = 0.5 * (kernel.regular[step] * y[0]);
    for (std::size_t j = 1; j < step; ++j) history += kernel.regular[step - j] * y[j];
    history *= h;
    y[step] = lu.solve(Vector(y[step - 1] + 0.5 * h * (rate_prev + history)));
    rate_prev = kernel.local * y[step] + history + 0.5 * h * (kernel.regular[0] * y[step]);
    out[step] = unvec(y[step], d);
  }
  return out;
}

}  // namespace oqs
