#include "oqs/laplace.hpp"

namespace oqs {

bool talbot_encloses(Complex pole, double t, int nodes) {
  const double r = talbot_radius(t, nodes);
  const double y = std::abs(pole.imag());
  if (y >= r * std::numbers::pi) return false;
  if (y == 0) return pole.real() < r;
  const double theta = y / r;
  return pole.real() < y * std::cos(theta) / std::sin(theta);
}

void check_talbot_poles(std::span<const Complex> poles, double t, int nodes) {
  for (const Complex& p : poles)
    if (!talbot_encloses(p, t, nodes)) throw ContourError(p, t);
}

}  // namespace oqs
