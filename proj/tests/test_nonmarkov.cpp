#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "oqs/gksl.hpp"
#include "oqs/nonmarkov.hpp"
#include "oqs/random.hpp"
#include "support.hpp"

#include <array>

using namespace oqs;
using namespace testing;

namespace {

const std::array<Matrix, 3> kPauli = {sigma_x(), sigma_y(), sigma_z()};

/// Qubit map acting on Bloch vectors as r -> M r + c (trace preserving).
Matrix bloch_superop(const Eigen::Matrix3d& mm, const Eigen::Vector3d& c) {
  return superop_by_definition(
      [&](const Matrix& x) {
        const Complex a = x.trace();
        Matrix out = a * Matrix::Identity(2, 2);
        for (int j = 0; j < 3; ++j) out += a * c(j) * kPauli[j];
        for (int i = 0; i < 3; ++i) {
          const Complex xi = (x * kPauli[i]).trace();
          for (int j = 0; j < 3; ++j) out += xi * mm(j, i) * kPauli[j];
        }
        return Matrix(0.5 * out);
      },
      2);
}

Matrix depolarizing(double lambda) { return bloch_superop(lambda * Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero()); }

Matrix transpose_superop() {
  Matrix s = Matrix::Zero(4, 4);
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 2; ++j) s(j + 2 * i, i + 2 * j) = 1.0;
  return s;
}

/// Bit flip with probability p(t) = (1 - e^{-t}(cos t + sin t)) / 2: the
/// closed-form dynamics of a bit-flip renewal process with Erlang-2 waits.
double erlang_flip(double t) { return 0.5 * (1.0 - erlang2_parity(t, 1.0)); }

DynamicsFamily erlang_family(double t_max, int n) {
  const auto grid = uniform_grid(t_max, n);
  std::vector<Matrix> maps;
  const Matrix x = superoperator(QuantumMap::unitary(sigma_x()));
  for (double t : grid) {
    const double p = erlang_flip(t);
    maps.push_back((1 - p) * Matrix::Identity(4, 4) + p * x);
  }
  return DynamicsFamily(grid, maps);
}

/// Grid sum of positive increments of e^{-t}|cos t + sin t|.
double erlang_revival_oracle(const std::vector<double>& grid) {
  double acc = 0;
  for (std::size_t i = 1; i < grid.size(); ++i)
    acc += std::max(0.0, std::abs(erlang2_parity(grid[i], 1.0)) - std::abs(erlang2_parity(grid[i - 1], 1.0)));
  return acc;
}

GKSLModel amplitude_damping() { return GKSLModel(HermitianOp::zero(2), {{1.0, sigma_minus()}}); }

/// identity, A, Lambda A with A depolarizing(0.3) and Lambda: r -> 0.9 r + 0.5 z.
/// Lambda shrinks Bloch differences but is not positive.
DynamicsFamily helstrom_only_family() {
  const Matrix a = depolarizing(0.3);
  const Matrix lam = bloch_superop(0.9 * Eigen::Matrix3d::Identity(), Eigen::Vector3d(0, 0, 0.5));
  return DynamicsFamily({0.0, 1.0, 2.0}, {Matrix::Identity(4, 4), a, lam * a});
}

MeasureOptions fast_options() {
  MeasureOptions o;
  o.random_pairs = 16;
  o.refine_starts = 2;
  return o;
}

}  // namespace

TEST_CASE("DynamicsFamily validation") {
  CHECK_THROWS_AS(DynamicsFamily({0.1, 1.0}, {Matrix::Identity(4, 4), depolarizing(0.5)}), InvalidInput);
  CHECK_THROWS_AS(DynamicsFamily({0.0, 1.0}, {depolarizing(0.5), depolarizing(0.5)}), InvalidInput);
  CHECK_THROWS_AS(DynamicsFamily({0.0, 1.0, 1.0}, {Matrix::Identity(4, 4), depolarizing(0.5), depolarizing(0.4)}),
                  InvalidInput);
  CHECK_THROWS_AS(DynamicsFamily({0.0, 1.0}, {Matrix::Identity(4, 4), transpose_superop()}), InvalidInput);
  CHECK_THROWS_AS(DynamicsFamily({0.0, 1.0}, {Matrix::Identity(4, 4)}), InvalidInput);
  const auto g = uniform_grid(2.0, 4);
  REQUIRE(g.size() == 5);
  CHECK(g[2] == doctest::Approx(1.0));
}

TEST_CASE("distinguishability_trajectory examples") {
  const auto grid = uniform_grid(3.0, 30);
  const DynamicsFamily id(grid, std::vector<Matrix>(grid.size(), Matrix::Identity(4, 4)));
  Rng rng(1);
  const Matrix r1 = random_mixed_state(2, rng).matrix(), r2 = random_mixed_state(2, rng).matrix();
  const double d0 = trace_distance(r1, r2);
  for (const auto& p : distinguishability_trajectory(id, r1, r2, 0.5, 0.5)) CHECK(std::abs(p.value - d0) < 1e-15);

  const auto ad = semigroup_family(amplitude_damping(), grid);
  const auto traj = distinguishability_trajectory(ad, ket_bra(2, 1, 1), ket_bra(2, 0, 0), 0.5, 0.5);
  for (const auto& p : traj) CHECK(std::abs(p.value - std::exp(-p.t)) < 1e-12);

  for (const auto& p : distinguishability_trajectory(ad, r1, r1, 0.5, 0.5)) CHECK(p.value == doctest::Approx(0.0));

  const auto h = distinguishability_trajectory(ad, r1, r2, 0.8, 0.2);
  for (std::size_t i = 0; i < h.size(); ++i)
    CHECK(std::abs(h[i].value - helstrom_norm(apply_map(ad.map(i), r1), apply_map(ad.map(i), r2), 0.8, 0.2)) < 1e-14);
}

TEST_CASE("revival_sum and revival_intervals") {
  const std::vector<TrajectoryPoint> tr = {{0, 1.0}, {1, 0.5}, {2, 0.7}, {3, 0.9}, {4, 0.2}, {5, 0.3}};
  CHECK(revival_sum(tr) == doctest::Approx(0.5));
  const auto iv = revival_intervals(tr);
  REQUIRE(iv.size() == 2);
  CHECK(iv[0].first == 1.0);
  CHECK(iv[0].second == 3.0);
  CHECK(iv[1].first == 4.0);
  CHECK(iv[1].second == 5.0);
  const std::vector<TrajectoryPoint> mono = {{0, 1.0}, {1, 0.5}, {2, 0.5 + 1e-14}};
  CHECK(revival_sum(mono) == 0.0);
  CHECK(revival_intervals(mono).empty());
}

TEST_CASE("blp_measure examples") {
  const auto grid = uniform_grid(5.0, 100);
  Rng rng(2);
  for (int n = 0; n < 3; ++n) {
    const auto r = blp_measure(semigroup_family(random_gksl(2, 2, rng), grid), fast_options());
    CHECK(r.value <= 1e-9);
    CHECK(r.revival_intervals.empty());
  }

  const auto f = erlang_family(10.0, 400);
  const auto r = blp_measure(f);
  const double oracle = erlang_revival_oracle(f.grid());
  CHECK(oracle > 0.04);
  CHECK(std::abs(r.value - oracle) <= 1e-3 * oracle);
  REQUIRE_FALSE(r.revival_intervals.empty());
  // first revival starts at the first zero of cos t + sin t
  CHECK(std::abs(r.revival_intervals.front().first - 3 * M_PI / 4) < 0.05);
  CHECK(r.p1 == 0.5);
  CHECK(r.p2 == 0.5);
  CHECK(check_state(r.rho1.matrix()).valid);
  // the reported pair reproduces the value
  CHECK(std::abs(revival_sum(distinguishability_trajectory(f, r.rho1.matrix(), r.rho2.matrix(), 0.5, 0.5)) -
                 r.value) < 1e-12);

  std::vector<Matrix> unitaries;
  const Matrix h = random_hermitian(2, rng);
  for (double t : grid) unitaries.push_back(superoperator(QuantumMap::unitary(expm(Matrix(-I1 * t * h)))));
  CHECK(blp_measure(DynamicsFamily(grid, unitaries), fast_options()).value <= 1e-9);
}

TEST_CASE("blp_measure on a qutrit semigroup uses random pairs") {
  Rng rng(3);
  const auto r = blp_measure(semigroup_family(random_gksl(3, 2, rng), uniform_grid(3.0, 30)), fast_options());
  CHECK(r.value <= 1e-9);
  CHECK(r.rho1.dim() == 3);
}

TEST_CASE("helstrom_measure examples") {
  Rng rng(4);
  const auto sg = semigroup_family(random_gksl(2, 2, rng), uniform_grid(5.0, 50));
  CHECK(helstrom_measure(sg, fast_options()).value <= 1e-9);

  const auto f = erlang_family(8.0, 160);
  CHECK(helstrom_measure(f, fast_options()).value >= blp_measure(f, fast_options()).value - 1e-9);

  const auto ho = helstrom_only_family();
  const auto b = blp_measure(ho);
  const auto h = helstrom_measure(ho);
  CHECK(b.value <= 1e-9);
  CHECK(h.value > 0.05);
  CHECK(h.p1 != doctest::Approx(0.5));
  // direct trajectory oracle for the hand-picked pair r = +z, -z with p1 = 0.7
  const auto tr = distinguishability_trajectory(ho, ket_bra(2, 0, 0), ket_bra(2, 1, 1), 0.7, 0.3);
  CHECK(tr[1].value == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(tr[2].value == doctest::Approx(0.47).epsilon(1e-12));
  CHECK(h.value >= 0.07 - 1e-9);
}

TEST_CASE("intermediate_map examples") {
  Rng rng(5);
  const auto m = random_gksl(2, 2, rng);
  const auto f = semigroup_family(m, uniform_grid(4.0, 8));
  CHECK(max_diff(superoperator(intermediate_map(f, 3, 3).map), Matrix::Identity(4, 4)) < 1e-10);
  CHECK(max_diff(superoperator(intermediate_map(f, 0, 5).map), f.maps()[5]) < 1e-14);
  const auto im = intermediate_map(f, 2, 6);
  const Matrix expect = expm(Matrix((f.grid()[6] - f.grid()[2]) * lindblad_superoperator(m)));
  CHECK(max_diff(superoperator(im.map), expect) < 1e-8);
  CHECK(im.condition_number >= 1.0);
  CHECK_THROWS_AS(intermediate_map(f, 4, 2), InvalidInput);
}

TEST_CASE("intermediate maps compose") {
  const auto f = erlang_family(2.0, 10);
  for (Index i = 0; i < 4; ++i) {
    const Matrix ik = superoperator(intermediate_map(f, i, 9).map);
    const Matrix ij = superoperator(intermediate_map(f, i, 5).map);
    const Matrix jk = superoperator(intermediate_map(f, 5, 9).map);
    CHECK(max_diff(ik, jk * ij) < 1e-7);
  }
}

TEST_CASE("intermediate_map rejects singular maps") {
  const Matrix dephase = bloch_superop(Eigen::Vector3d(0, 0, 1).asDiagonal(), Eigen::Vector3d::Zero());
  const DynamicsFamily f({0.0, 1.0, 2.0}, {Matrix::Identity(4, 4), dephase, dephase});
  try {
    (void)intermediate_map(f, 1, 2);
    FAIL("expected NonInvertible");
  } catch (const NonInvertible& e) {
    CHECK(e.condition_number > 1e8);
  }
  CHECK_THROWS_AS(check_cp_divisible(f), NonInvertible);
}

TEST_CASE("check_cp_divisible examples") {
  Rng rng(6);
  CHECK(check_cp_divisible(semigroup_family(random_gksl(2, 3, rng), uniform_grid(5.0, 50))).divisible);
  const auto grid = uniform_grid(1.0, 5);
  CHECK(check_cp_divisible(DynamicsFamily(grid, std::vector<Matrix>(grid.size(), Matrix::Identity(4, 4)))).divisible);

  // avoid the singular point t = 3 pi / 4 of the Erlang flip family
  const auto f = erlang_family(3.0, 60);
  const auto rep = check_cp_divisible(f);
  CHECK_FALSE(rep.divisible);
  CHECK(rep.worst_min_choi_eig < -1e-8);
  // negative Choi eigenvalues appear once the flip rate turns negative: dp/dt < 0 from t = pi / 2
  const double t_worst = f.grid()[rep.worst_step];
  CHECK(t_worst > M_PI / 2 - 0.1);
  for (std::size_t i = 0; i < rep.min_choi_eigs.size(); ++i) {
    const double t_mid = 0.5 * (f.grid()[i] + f.grid()[i + 1]);
    if (t_mid < M_PI / 2 - 0.1) CHECK(rep.min_choi_eigs[i] >= -1e-8);
  }
}

TEST_CASE("positivity_check") {
  const auto t = QuantumMap::from_superoperator(transpose_superop(), 2, 2);
  const auto pt = positivity_check(t, 50, 1);
  CHECK(pt.exhaustive);
  CHECK(pt.min_output_eig >= -1e-12);

  // r -> 0.9 r + 0.5 z: worst input is r = +z, output eigenvalue (1 - 1.4) / 2
  const auto lam = QuantumMap::from_superoperator(
      bloch_superop(0.9 * Eigen::Matrix3d::Identity(), Eigen::Vector3d(0, 0, 0.5)), 2, 2);
  const auto pl = positivity_check(lam, 50, 1);
  CHECK(pl.min_output_eig == doctest::Approx(-0.2).epsilon(1e-6));

  Rng rng(7);
  const auto q = positivity_check(random_cptp(3, 2, rng), 100, 2);
  CHECK_FALSE(q.exhaustive);
  CHECK(q.min_output_eig >= -1e-12);
}

TEST_CASE("check_p_divisible examples") {
  Rng rng(8);
  const auto sg = semigroup_family(random_gksl(2, 2, rng), uniform_grid(3.0, 30));
  REQUIRE(check_cp_divisible(sg).divisible);
  const auto ps = check_p_divisible(sg);
  CHECK(ps.divisible);
  CHECK(ps.helstrom_monotone);
  CHECK(ps.cross_check_agrees);
  CHECK(ps.exhaustive);

  // intermediate map is a transpose: positive but not CP
  const Matrix a = depolarizing(0.3);
  const DynamicsFamily tf({0.0, 1.0, 2.0}, {Matrix::Identity(4, 4), a, transpose_superop() * a});
  CHECK_FALSE(check_cp_divisible(tf).divisible);
  const auto pt = check_p_divisible(tf);
  CHECK(pt.divisible);
  CHECK(pt.cross_check_agrees);

  const auto f = erlang_family(3.0, 60);
  const auto pe = check_p_divisible(f);
  CHECK_FALSE(pe.divisible);
  CHECK_FALSE(pe.helstrom_monotone);
  CHECK(pe.cross_check_agrees);
  REQUIRE(pe.witness.has_value());
  // violations line up between the two criteria
  for (std::size_t i = 0; i < pe.min_output_eigs.size(); ++i) {
    const bool neg = pe.min_output_eigs[i] < -2e-8;
    const bool inc = pe.helstrom_excess[i] > 2e-8;
    CHECK(neg == inc);
  }

  const auto ho = check_p_divisible(helstrom_only_family());
  CHECK_FALSE(ho.divisible);
  CHECK_FALSE(ho.helstrom_monotone);
  CHECK(ho.cross_check_agrees);

  const auto q = check_p_divisible(semigroup_family(random_gksl(3, 2, rng), uniform_grid(2.0, 10)), 1e-8, 50);
  CHECK_FALSE(q.exhaustive);
  CHECK(q.divisible);
}

TEST_CASE("CP divisibility implies P divisibility implies monotone trace distance") {
  Rng rng(9);
  std::vector<DynamicsFamily> fams;
  for (int n = 0; n < 3; ++n) fams.push_back(semigroup_family(random_gksl(2, 2, rng), uniform_grid(3.0, 30)));
  fams.push_back(erlang_family(2.0, 40));
  fams.push_back(helstrom_only_family());
  for (const auto& f : fams) {
    const bool cp = check_cp_divisible(f).divisible;
    const bool p = check_p_divisible(f).divisible;
    if (cp) CHECK(p);
    if (p) {
      for (int k = 0; k < 10; ++k) {
        const auto tr = distinguishability_trajectory(f, random_pure_state(2, rng).matrix(),
                                                      random_mixed_state(2, rng).matrix(), 0.5, 0.5);
        CHECK(revival_sum(tr, 1e-10) == 0.0);
      }
    }
  }
}

TEST_CASE("measures are invariant under a fixed unitary conjugation") {
  Rng rng(10);
  const auto f = erlang_family(6.0, 120);
  const auto g = conjugate_family(f, random_unitary(2, rng));
  CHECK(std::abs(blp_measure(f).value - blp_measure(g).value) < 1e-9);
  const auto ho = helstrom_only_family();
  const auto hg = conjugate_family(ho, random_unitary(2, rng));
  CHECK(std::abs(helstrom_measure(ho).value - helstrom_measure(hg).value) < 1e-9);
}

TEST_CASE("measure converges under grid refinement") {
  const double coarse = blp_measure(erlang_family(10.0, 200)).value;
  const double fine = blp_measure(erlang_family(10.0, 400)).value;
  CHECK(std::abs(coarse - fine) < 1e-3 * fine);
}

TEST_CASE("parallel measure matches serial") {
  auto o = fast_options();
  const auto f = erlang_family(6.0, 60);
  const auto a = blp_measure(f, o);
  o.threads = 4;
  const auto b = blp_measure(f, o);
  CHECK(a.value == b.value);
  CHECK(max_diff(a.rho1.matrix(), b.rho1.matrix()) == 0.0);
}
