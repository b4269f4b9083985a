#pragma once

#include <vector>

#include "fkstable/model.hpp"
#include "fkstable/types.hpp"

namespace fkstable {

enum class EnvelopeRegime {
  SmallUpper,
  SmallLower,
  LargeTransient,
  LargeRecurrent,
  LargeCritical,
  GreenTransient,
  GreenRecurrent,
  GreenCritical,
  GlobalUpper,
  FreeKernel,
  DirichletBall,
  DirichletExterior,
};

struct EnvelopeValue {
  Real value = 0.0;
  EnvelopeRegime regime = EnvelopeRegime::FreeKernel;
};

enum class Side { Upper, Lower };

// Free-kernel comparison shape  t^{-d/alpha} (1 ^ t^{1/alpha}/|x-y|)^{d+alpha}.
Real wtq(int d, Real alpha, Real t, Real r);
Real wtq(const ModelSpec& model, Real t, const Point& x, const Point& y);

// Small-time two-sided envelope on (0, T]:
//   (1 ^ psi(|x|)/t)(1 ^ psi(|y|)/t)
//     * [ e^{-lambda t / psi(|x| v |y|)} wtq(t,x,y)
//         + t^2 psi^{-1}(t)^{-(d+2alpha)} (1 ^ psi^{-1}(t)/|x-y|)^{d+2alpha} ].
EnvelopeValue small_time_envelope(const ModelSpec& model, Real t, const Point& x, const Point& y,
                                  Side side, Real lambda, Real T = 1.0);

// Constant-free global upper shape (1 ^ psi(|x|)/(t^1))(1 ^ psi(|y|)/(t^1)) wtq.
EnvelopeValue global_upper(const ModelSpec& model, Real t, const Point& x, const Point& y);

// Large-time shape for t >= 2; the boundary factor depends on the regime.
EnvelopeValue large_time_envelope(const ModelSpec& model, Real t, const Point& x, const Point& y);
Real large_time_factor(const ModelSpec& model, Real t, Real r);

// Green-function shape, all three regimes.  Diagonal x = y diverges for
// d >= alpha and is reported as +infinity; for d = 1 < alpha the finite
// formula value is returned.
EnvelopeValue green_envelope(const ModelSpec& model, const Point& x, const Point& y);

// Near-diagonal Green shape, valid when |x-y| v psi(|x| ^ |y|) <= 1.
EnvelopeValue green_small_regime(const ModelSpec& model, const Point& x, const Point& y);

struct BoundaryFactor {
  Real value = 1.0;  // in [0, 1]
  enum class Case { Ball, ExteriorTransient, ExteriorRecurrent, ExteriorCritical, HR, FR } kind =
      Case::Ball;
};

struct Geometry {
  enum class Kind { Ball, Exterior } kind = Kind::Ball;
  Point center;
  Real radius = 1.0;
  static Geometry ball(Point z, Real R) { return {Kind::Ball, std::move(z), R}; }
  static Geometry exterior(Point z, Real R) { return {Kind::Exterior, std::move(z), R}; }
};

// Dirichlet boundary decay factor of the free process killed on the
// complement of the geometry.  For a ball the factor is valid for
// t <= (k R)^alpha.
BoundaryFactor dirichlet_factor(const ModelSpec& model, const Geometry& geom, Real t,
                                const Point& w, Real k = 1.0);

// One-sided exterior factors used by the one-step integral, simplified forms:
//   h_R(s,z) = 1 ^ |z|^{alpha-1} / s^{(alpha-1)/alpha}   (d = 1 < alpha, |z| > R >= 1)
//   f_R(s,z) = 1 ^ Log(|z|/R) / Log(s/R)                 (d = 1 = alpha, |z| > R >= 1)
BoundaryFactor h_factor(const ModelSpec& model, Real R, Real s, const Point& z);
BoundaryFactor f_factor(const ModelSpec& model, Real R, Real s, const Point& z);

struct DominantBoundReport {
  Real fitted_c = 0.0;  // min C such that the second small-time term <= C wtq on the grid
  Real worst_t = 0.0, worst_r = 0.0;
};

DominantBoundReport dominant_bound_check(const ModelSpec& model, Real T,
                                         const std::vector<Real>& t_grid,
                                         const std::vector<Real>& r_grid);

}  // namespace fkstable
