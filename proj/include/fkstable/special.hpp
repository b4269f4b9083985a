#pragma once

#include <cmath>
#include <stdexcept>

#include "fkstable/types.hpp"

namespace fkstable {

// Gamma function, Lanczos approximation (g = 7, 9 coefficients).
// Relative accuracy better than 1e-12 on the real axis away from the poles.
Real gamma_fn(Real z);

// Log r := log(e - 1 + r), r >= 0.  Equals 1 at r = 1 and is bounded
// below by log(e - 1) > 0.
inline Real log_fn(Real r) {
  if (r < 0.0) throw std::domain_error("log_fn: negative argument");
  return std::log(std::exp(1.0) - 1.0 + r);
}

// Surface measure of the unit sphere in R^d: A_{d-1} = 2 pi^{d/2} / Gamma(d/2).
Real sphere_area(int d);

// Jump-kernel normalization of the fractional Laplacian of order alpha,
//   A(d,-alpha) = alpha 2^{alpha-1} Gamma((d+alpha)/2) / (pi^{d/2} Gamma(1-alpha/2)).
// Finite for every alpha in (0,2), in particular at alpha = 1.
Real stable_constant(int d, Real alpha);

}  // namespace fkstable
