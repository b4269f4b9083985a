#include "fkstable/special.hpp"

#include <numbers>

namespace fkstable {

namespace {

constexpr double kLanczosG = 7.0;
constexpr double kLanczos[9] = {
    0.99999999999980993,      676.5203681218851,     -1259.1392167224028,
    771.32342877765313,       -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,     9.9843695780195716e-6, 1.5056327351493116e-7};

double lanczos_positive(double z) {
  // valid for z >= 0.5
  double x = kLanczos[0];
  for (int i = 1; i < 9; ++i) x += kLanczos[i] / (z - 1.0 + i);
  double t = z + kLanczosG - 0.5;
  return std::sqrt(2.0 * std::numbers::pi) * std::pow(t, z - 0.5) * std::exp(-t) * x;
}

}  // namespace

Real gamma_fn(Real z) {
  if (!std::isfinite(z)) throw std::domain_error("gamma_fn: non-finite argument");
  if (z <= 0.0 && z == std::floor(z)) throw std::domain_error("gamma_fn: pole");
  if (z < 0.5) {
    // reflection
    return std::numbers::pi / (std::sin(std::numbers::pi * z) * lanczos_positive(1.0 - z));
  }
  return lanczos_positive(z);
}

Real sphere_area(int d) {
  if (d < 1) throw std::domain_error("sphere_area: d >= 1 required");
  return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / gamma_fn(0.5 * d);
}

Real stable_constant(int d, Real alpha) {
  if (alpha <= 0.0 || alpha >= 2.0) throw std::domain_error("stable_constant: alpha in (0,2)");
  return alpha * std::pow(2.0, alpha - 1.0) * gamma_fn(0.5 * (d + alpha)) /
         (std::pow(std::numbers::pi, 0.5 * d) * gamma_fn(1.0 - 0.5 * alpha));
}

}  // namespace fkstable
