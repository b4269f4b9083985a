#pragma once

#include <vector>

#include "fkstable/model.hpp"
#include "fkstable/types.hpp"

namespace fkstable {

// H(r) = (2/r^2) int_0^r int_0^s psi(u) du ds.  Power-law psi admits the
// closed forms H = 2 r^beta / ((beta+1)(beta+2)), H' = beta H / r,
// H'' = beta (beta-1) H / r^2; tabulated psi is integrated once onto a
// frozen log grid at construction.
class BarrierH {
 public:
  explicit BarrierH(const ScalingFunction& psi);

  Real value(Real r) const;
  Real deriv1(Real r) const;
  Real deriv2(Real r) const;
  Real eval(Real r, int order) const;  // order in {0, 1, 2}

  const ScalingFunction& psi() const { return psi_; }

 private:
  Real cum_psi(Real r) const;      // int_0^r psi
  Real cum_cum_psi(Real r) const;  // int_0^r (r - u) psi(u) du

  ScalingFunction psi_;
  bool closed_form_ = true;
  // frozen tables for the tabulated kind, log-spaced radii
  std::vector<Real> grid_;   // radii
  std::vector<Real> f_;      // int_0^{r_i} psi
  std::vector<Real> g_;      // int_0^{r_i} int_0^s psi du ds
};

struct LemmaHReport {
  bool pass = false;
  Real worst_lower = 0.0;   // min of C0 H / psi   (needs >= 1)
  Real worst_upper = 0.0;   // max of H / psi      (needs <= 1)
  Real worst_d1 = 0.0;      // max of |r H'| / (2 C0 H)
  Real worst_d2 = 0.0;      // max of |r^2 H''| / (6 C0 H)
};

// Verifies C0^{-1} psi <= H <= psi, |rH'| <= 2 C0 H, |r^2 H''| <= 6 C0 H
// with the explicit C0 = 2^{2 beta2 + 3} lambda / 3.
LemmaHReport lemma_H_check(const BarrierH& H, const std::vector<Real>& grid, Real tol = 1e-10);

// Radial C^2 barrier: equals H inside 4 eps0 R, a constant plateau
// delta0 R^alpha on [R, 2^{1/d} R], and 0 outside 4^{1/d} R, with quintic
// C^2 joins kept inside the admissible ranges.
class BarrierPhi {
 public:
  BarrierPhi(const ModelSpec& model, Real R);
  BarrierPhi(const ModelSpec& model, Real R, const Constants& consts);

  Real value(Real r) const;
  Real operator()(const Point& x) const { return value(x.norm()); }

  Real R() const { return r_; }
  Real eps0() const { return eps0_; }
  Real delta0() const { return delta0_; }
  Real plateau() const { return plateau_; }
  const BarrierH& H() const { return h_; }
  // junction radii, ordered; the profile is C^2 across each
  std::vector<Real> junctions() const;

 private:
  void build();

  BarrierH h_;
  int d_ = 1;
  Real alpha_ = 1.0;
  Real r_ = 1.0;
  Real eps0_ = 0.0, delta0_ = 0.0;
  Real plateau_ = 0.0;  // delta0 R^alpha
  Real a1_ = 0.0;       // 4 eps0 R
  Real flat_hi_ = 0.0;  // end of the flattening join
  Real rise_lo_ = 0.0;  // start of the rise to the plateau
  Real c1_ = 0.0;       // 2^{1/d} R
  Real c2_ = 0.0;       // 4^{1/d} R
  Real level_ = 0.0;    // H(a1), the flat level between the joins
  Real flat_coef_[6] = {0, 0, 0, 0, 0, 0};
  Real rise_coef_[6] = {0, 0, 0, 0, 0, 0};
  Real drop_coef_[6] = {0, 0, 0, 0, 0, 0};
};

struct QuadratureSpec {
  Real rel_tol = 1e-6;
  Real abs_tol = 1e-10;
  int max_refine = 8;
  int base_panels_per_decade = 6;
  int theta_points = 48;  // angular resolution for d >= 2
};

struct PvResult {
  Real value = 0.0;
  Real error = 0.0;  // Richardson-style estimate from one refinement
  bool converged = false;
};

// -(-Delta)^{alpha/2} phi (x) for the radial barrier by principal-value
// quadrature: spherical averaging cancels the odd part, so the radial
// displacement integral has an integrable u^{1-alpha} singularity.
PvResult frac_laplacian_pv(const BarrierPhi& phi, const ModelSpec& model, const Point& x,
                           const QuadratureSpec& quad = {});

// Same machinery for an arbitrary radial profile (calibration inputs).
PvResult frac_laplacian_pv_radial(const std::function<Real(Real)>& profile, Real support_radius,
                                  const ModelSpec& model, Real r,
                                  const QuadratureSpec& quad = {});

struct GeneratorCheckPoint {
  Real radius = 0.0;
  Real pv = 0.0;
  Real pv_error = 0.0;
  Real margin = 0.0;  // pv - kappa(x)/2 * H(|x|)
  bool pass = false;
  bool quad_ok = false;
};

struct GeneratorCheckReport {
  std::vector<GeneratorCheckPoint> points;
  Real threshold = 0.0;  // -1/(4 C0 lambda)
  bool pass = false;
};

// L^{kappa/2} phi_R (x) <= -1/(4 C0 lambda) at the sample radii (all must
// lie in (0, eps0 R)).
GeneratorCheckReport generator_check(const BarrierPhi& phi, const ModelSpec& model,
                                     const std::vector<Real>& radii,
                                     const QuadratureSpec& quad = {}, Real tol = 1e-4);

}  // namespace fkstable
