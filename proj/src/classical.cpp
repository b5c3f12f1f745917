#include "oqs/classical.hpp"

#include "oqs/laplace.hpp"
#include "oqs/parallel.hpp"
#include "oqs/random.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cstdio>

namespace oqs {

namespace {

void require_probability(const RealVector& p0, Index n) {
  if (p0.size() != n) throw InvalidInput("initial distribution has the wrong length");
  for (Index i = 0; i < n; ++i)
    if (!(p0(i) >= 0)) throw InvalidInput("initial distribution has a negative entry");
  if (std::abs(p0.sum() - 1.0) > 1e-12) throw InvalidInput("initial distribution does not sum to 1");
}

}  // namespace

std::vector<std::string> stochastic_violations(const RealMatrix& pi, double tol) {
  std::vector<std::string> out;
  if (pi.rows() != pi.cols() || pi.rows() == 0) {
    out.push_back("jump matrix must be square and nonempty");
    return out;
  }
  for (Index m = 0; m < pi.cols(); ++m) {
    for (Index n = 0; n < pi.rows(); ++n)
      if (pi(n, m) < 0) out.push_back("column " + std::to_string(m) + ": negative entry in row " +
                                      std::to_string(n));
    const double sum = pi.col(m).sum();
    if (std::abs(sum - 1.0) > tol) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "column %ld: sums to %.17g", static_cast<long>(m), sum);
      out.emplace_back(buf);
    }
  }
  return out;
}

ClassicalSemiMarkov::ClassicalSemiMarkov(RealMatrix pi, std::vector<PhaseTypeWTD> wtds)
    : pi_(std::move(pi)), wtds_(std::move(wtds)) {
  const auto bad = stochastic_violations(pi_);
  if (!bad.empty()) {
    std::string msg = "jump matrix is not column stochastic:";
    for (const auto& b : bad) msg += " " + b + ";";
    throw InvalidInput(msg);
  }
  if (static_cast<Index>(wtds_.size()) != pi_.rows())
    throw InvalidInput("need one waiting-time distribution per site");
}

RealMatrix classical_extended_generator(const ClassicalSemiMarkov& c) {
  const Index n = c.sites();
  std::vector<Index> offset(n + 1, 0);
  for (Index i = 0; i < n; ++i) offset[i + 1] = offset[i] + c.wtds()[i].stages();
  RealMatrix a = RealMatrix::Zero(offset[n], offset[n]);
  for (Index m = 0; m < n; ++m) {
    const auto& fm = c.wtds()[m];
    a.block(offset[m], offset[m], fm.stages(), fm.stages()) += fm.generator().transpose();
    for (Index k = 0; k < n; ++k) {
      const double p = c.jump_matrix()(k, m);
      if (p == 0) continue;
      const auto& fk = c.wtds()[k];
      a.block(offset[k], offset[m], fk.stages(), fm.stages()) +=
          p * fk.alpha() * fm.exit_rates().transpose();
    }
  }
  return a;
}

Vector classical_laplace(const ClassicalSemiMarkov& c, const RealVector& p0, Complex u) {
  const Index n = c.sites();
  Vector f(n), g(n);
  for (Index i = 0; i < n; ++i) {
    f(i) = c.wtds()[i].laplace(u);
    g(i) = c.wtds()[i].survival_laplace(u);
  }
  const Matrix a = Matrix::Identity(n, n) - c.jump_matrix().cast<Complex>() * f.asDiagonal();
  const Vector x = a.partialPivLu().solve(p0.cast<Complex>());
  return g.cwiseProduct(x);
}

std::vector<RealVector> classical_gme_solve(const ClassicalSemiMarkov& c, const RealVector& p0,
                                            std::span<const double> grid, int talbot_nodes) {
  require_probability(p0, c.sites());
  Eigen::EigenSolver<RealMatrix> es(classical_extended_generator(c), false);
  const Vector ev = es.eigenvalues();
  const std::vector<Complex> poles(ev.data(), ev.data() + ev.size());
  std::vector<RealVector> out;
  out.reserve(grid.size());
  for (double t : grid) {
    if (!(t >= 0)) throw InvalidInput("classical_gme_solve: negative time");
    if (t == 0) {
      out.push_back(p0);
      continue;
    }
    check_talbot_poles(poles, t, talbot_nodes);
    const Matrix p = talbot_invert([&](Complex u) { return Matrix(classical_laplace(c, p0, u)); }, t,
                                   talbot_nodes);
    out.push_back(p.col(0).real());
  }
  return out;
}

ClassicalMcEstimate classical_mc(const ClassicalSemiMarkov& c, const RealVector& p0,
                                 std::span<const double> grid, long n_traj, std::uint64_t seed,
                                 int threads) {
  require_probability(p0, c.sites());
  if (n_traj < 1) throw InvalidInput("classical_mc: n_traj must be >= 1");
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (!(grid[i] >= 0) || (i > 0 && !(grid[i] > grid[i - 1])))
      throw InvalidInput("classical_mc: grid must be nonnegative and strictly increasing");
  const Index n = c.sites();
  const std::size_t nodes = grid.size();
  const double t_end = nodes ? grid.back() : 0.0;

  auto pick = [](const auto& weights, Index size, double u) {
    double acc = 0;
    for (Index i = 0; i < size; ++i) {
      acc += weights(i);
      if (u < acc) return i;
    }
    Index last = size - 1;
    while (last > 0 && weights(last) == 0) --last;
    return last;
  };

  // counts[block][node * n + site]
  constexpr long kBlock = 256;
  const long n_blocks = (n_traj + kBlock - 1) / kBlock;
  std::vector<std::vector<long>> counts(n_blocks);
  parallel_for(n_blocks, threads, [&](long b) {
    auto& cnt = counts[b];
    cnt.assign(nodes * n, 0);
    const long end = std::min(n_traj, (b + 1) * kBlock);
    for (long traj = b * kBlock; traj < end; ++traj) {
      Rng rng = make_stream(seed, static_cast<std::uint64_t>(traj));
      Index site = pick(p0, n, uniform01(rng));
      double next = c.wtds()[site].sample(rng);
      for (std::size_t node = 0; node < nodes; ++node) {
        while (next <= grid[node] && next <= t_end) {
          site = pick(c.jump_matrix().col(site), n, uniform01(rng));
          next += c.wtds()[site].sample(rng);
        }
        ++cnt[node * n + site];
      }
    }
  });

  ClassicalMcEstimate est;
  est.grid.assign(grid.begin(), grid.end());
  est.n_traj = n_traj;
  for (std::size_t node = 0; node < nodes; ++node) {
    RealVector mean = RealVector::Zero(n);
    for (const auto& cnt : counts)
      for (Index s = 0; s < n; ++s) mean(s) += static_cast<double>(cnt[node * n + s]);
    mean /= static_cast<double>(n_traj);
    RealVector se = (mean.array() * (1.0 - mean.array()) / static_cast<double>(n_traj)).sqrt();
    est.mean.push_back(mean);
    est.stderr_.push_back(se);
  }
  return est;
}

SemiMarkovModel classical_embedding(const ClassicalSemiMarkov& c) {
  const Index n = c.sites();
  for (Index i = 1; i < n; ++i)
    if (!c.wtds()[i].same_as(c.wtds()[0]))
      throw UnsupportedEmbedding("classical_embedding: site " + std::to_string(i) +
                                 " has a different waiting-time distribution than site 0");
  std::vector<Matrix> ops;
  for (Index m = 0; m < n; ++m)
    for (Index k = 0; k < n; ++k) {
      const double p = c.jump_matrix()(k, m);
      if (p <= 0) continue;
      Matrix op = Matrix::Zero(n, n);
      op(k, m) = std::sqrt(p);
      ops.push_back(std::move(op));
    }
  return SemiMarkovModel(QuantumMap::from_kraus(std::move(ops)), GKSLModel::trivial(n), c.wtds()[0]);
}

}  // namespace oqs
