// Memory-effect witnesses over tabulated dynamics: trace-distance and
// Helstrom-norm revival measures, intermediate maps, CP- and P-divisibility.
#pragma once

#include "oqs/gksl.hpp"
#include "oqs/qcore.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace oqs {

/// t_k = k * t_max / n_steps, k = 0..n_steps.
std::vector<double> uniform_grid(double t_max, int n_steps);

/// Superoperators Phi(t_i, 0) on a strictly increasing grid starting at 0
/// with Phi(0, 0) = identity. Every map must be CPTP to `tol`.
class DynamicsFamily {
 public:
  DynamicsFamily(std::vector<double> grid, std::vector<Matrix> maps, double tol = 1e-8);

  Index dim() const { return dim_; }
  Index size() const { return static_cast<Index>(grid_.size()); }
  const std::vector<double>& grid() const { return grid_; }
  const std::vector<Matrix>& maps() const { return maps_; }
  QuantumMap map(Index i) const { return QuantumMap::from_superoperator(maps_.at(i), dim_, dim_); }

 private:
  std::vector<double> grid_;
  std::vector<Matrix> maps_;
  Index dim_ = 0;
};

DynamicsFamily semigroup_family(const GKSLModel& m, std::span<const double> grid);

/// Post-composes every map of the family with u . u^dagger.
DynamicsFamily conjugate_family(const DynamicsFamily& f, const Matrix& u);

struct TrajectoryPoint {
  double t = 0;
  double value = 0;
};

/// Delta_i = || p1 Phi_i[rho1] - p2 Phi_i[rho2] ||_1. With p1 = p2 = 1/2 this
/// is the trace distance of the evolved pair.
std::vector<TrajectoryPoint> distinguishability_trajectory(const DynamicsFamily& f,
                                                           const Matrix& rho1, const Matrix& rho2,
                                                           double p1, double p2);

/// Sum of forward increments larger than `tol`.
double revival_sum(std::span<const TrajectoryPoint> traj, double tol = 1e-12);
std::vector<std::pair<double, double>> revival_intervals(std::span<const TrajectoryPoint> traj,
                                                         double tol = 1e-12);

struct MeasureOptions {
  // qubit antipodal-pair grid on the Bloch sphere
  int theta_points = 13;
  int phi_points = 24;
  int random_pairs = 64;
  std::uint64_t seed = 2024;
  // p1 grid for the Helstrom search
  int weight_points = 21;
  // coordinate pattern search from the best candidates
  int refine_starts = 4;
  double refine_step = 0.2;
  double refine_min_step = 1e-5;
  int refine_max_sweeps = 400;
  double revival_tol = 1e-12;
  int threads = 1;
};

struct MeasureResult {
  double value = 0;
  DensityMatrix rho1{Matrix::Identity(1, 1)};
  DensityMatrix rho2{Matrix::Identity(1, 1)};
  double p1 = 0.5;
  double p2 = 0.5;
  std::vector<std::pair<double, double>> revival_intervals;
  std::vector<TrajectoryPoint> trajectory;
  long evaluations = 0;
};

/// Lower bound on the trace-distance revival measure: maximum over the
/// candidate pairs (plus local refinement) of the summed positive increments.
MeasureResult blp_measure(const DynamicsFamily& f, const MeasureOptions& opt = {});

/// As blp_measure but maximized over the prior weights too.
MeasureResult helstrom_measure(const DynamicsFamily& f, const MeasureOptions& opt = {});

struct IntermediateMap {
  QuantumMap map;
  double condition_number = 1;
};

/// Phi(t_j, t_i) = Phi(t_j, 0) Phi(t_i, 0)^{-1}. Throws NonInvertible when
/// the condition number of Phi(t_i, 0) exceeds `max_condition`.
IntermediateMap intermediate_map(const DynamicsFamily& f, Index i, Index j,
                                 double max_condition = 1e8);

struct CpDivisibilityReport {
  bool divisible = true;
  Index worst_step = 0;
  double worst_min_choi_eig = 0;
  /// min Choi eigenvalue of Phi(t_{i+1}, t_i)
  std::vector<double> min_choi_eigs;
};

CpDivisibilityReport check_cp_divisible(const DynamicsFamily& f, double tol = 1e-8,
                                        double max_condition = 1e8);

struct PositivityResult {
  double min_output_eig = 0;
  Vector worst_input;
  /// true for the qubit Bloch-sphere search, false for random sampling
  bool exhaustive = false;
};

/// min over pure inputs of the smallest output eigenvalue.
PositivityResult positivity_check(const QuantumMap& m, int n_samples, std::uint64_t seed);

struct HelstromWitness {
  Index step = 0;
  Matrix rho1;
  Matrix rho2;
  double p1 = 0;
  double p2 = 0;
  double increase = 0;
};

struct PDivisibilityReport {
  bool divisible = true;
  bool exhaustive = false;
  Index worst_step = 0;
  double worst_min_eig = 0;
  std::vector<double> min_output_eigs;
  /// max over sampled Helstrom matrices of the one-step norm increase
  std::vector<double> helstrom_excess;
  bool helstrom_monotone = true;
  bool cross_check_agrees = true;
  std::optional<HelstromWitness> witness;
};

struct PDivisibilityOptions {
  std::uint64_t seed = 99;
  double max_condition = 1e8;
  int threads = 1;
};

PDivisibilityReport check_p_divisible(const DynamicsFamily& f, double tol = 1e-8,
                                      int n_samples = 200, const PDivisibilityOptions& opt = {});

}  // namespace oqs
