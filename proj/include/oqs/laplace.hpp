// Fixed-Talbot numerical inverse Laplace transform for matrix-valued
// transforms.
#pragma once

#include "oqs/qcore.hpp"

#include <numbers>
#include <span>

namespace oqs {

/// A transform singularity lies outside the Talbot contour for the
/// requested time.
class ContourError : public Error {
 public:
  ContourError(Complex p, double t)
      : Error("Talbot contour at t = " + std::to_string(t) + " does not enclose pole (" +
              std::to_string(p.real()) + ", " + std::to_string(p.imag()) + ")"),
        pole(p) {}
  Complex pole;
};

/// Contour u(theta) = r theta (cot theta + i), r = 2 M / (5 t).
inline double talbot_radius(double t, int nodes) { return 2.0 * nodes / (5.0 * t); }

/// Whether `pole` lies strictly to the left of the contour for time t.
bool talbot_encloses(Complex pole, double t, int nodes);

/// Throws ContourError for the first pole the contour misses.
void check_talbot_poles(std::span<const Complex> poles, double t, int nodes);

/// f(t) from F(u). Uses both halves of the contour, so F need not satisfy
/// F(conj u) = conj F(u). Requires t > 0.
template <typename Transform>
Matrix talbot_invert(Transform&& transform, double t, int nodes) {
  if (!(t > 0)) throw InvalidInput("talbot_invert: t must be positive");
  if (nodes < 2) throw InvalidInput("talbot_invert: need at least 2 nodes");
  const double r = talbot_radius(t, nodes);
  Matrix acc = 0.5 * std::exp(r * t) * Matrix(transform(Complex(r, 0.0)));
  for (int k = 1; k < nodes; ++k) {
    const double theta = k * std::numbers::pi / nodes;
    const double cot = std::cos(theta) / std::sin(theta);
    const Complex s(r * theta * cot, r * theta);
    const double sigma = theta + (theta * cot - 1.0) * cot;
    const Complex up = std::exp(t * s) * Complex(1.0, sigma);
    const Complex down = std::exp(t * std::conj(s)) * Complex(1.0, -sigma);
    acc += 0.5 * (up * Matrix(transform(s)) + down * Matrix(transform(std::conj(s))));
  }
  return (r / nodes) * acc;
}

}  // namespace oqs
