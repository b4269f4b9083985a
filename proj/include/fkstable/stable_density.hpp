#pragma once

#include <memory>
#include <vector>

#include "fkstable/types.hpp"

namespace fkstable {

// Density, distribution and interval masses of the standard 1-D isotropic
// alpha-stable law (characteristic function e^{-|xi|^alpha}).  Evaluation
// combines a power-series tail, a Taylor series near zero (alpha > 1) and
// oscillatory quadrature of the Fourier inversion integral in between; a
// cached cumulative table serves the distribution function on the head.
class StableDensity1D {
 public:
  explicit StableDensity1D(Real alpha);

  Real alpha() const { return alpha_; }

  Real density(Real u) const;           // q1(|u|)
  Real cdf(Real u) const;               // P(Z <= u)
  Real interval_mass(Real a, Real b) const;  // P(a < Z <= b)

  // scaled law of t^{1/alpha} Z
  Real density_scaled(Real t, Real r) const;
  Real interval_mass_scaled(Real t, Real a, Real b) const;

  Real at_zero() const;  // q1(0) = Gamma(1 + 1/alpha) / pi

 private:
  Real density_series_tail(Real u, Real* err) const;
  Real density_series_taylor(Real u, Real* err) const;
  Real density_quadrature(Real u) const;
  Real tail_mass(Real u) const;  // P(Z > u), u >= head_max_ via the tail series
  void build_head_table();

  Real alpha_;
  bool cauchy_ = false;
  Real head_max_ = 0.0;   // cumulative table covers [0, head_max_]
  Real head_du_ = 0.0;
  std::vector<Real> head_q_;    // density at knots
  std::vector<Real> head_cum_;  // integral of q1 over [0, knot]
  Real total_head_ = 0.0;       // integral over [0, head_max_]
};

// Shared per-alpha cache (the law does not depend on the model otherwise).
const StableDensity1D& stable_density(Real alpha);

// Free transition density of the 1-D isotropic alpha-stable process,
// q(t, r) = t^{-1/alpha} q1(r t^{-1/alpha}).  alpha = 1 is the exact Cauchy
// kernel t / (pi (t^2 + r^2)).
Real free_kernel_1d(Real alpha, Real t, Real r);

}  // namespace fkstable
