#include "fkstable/barrier.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "fkstable/special.hpp"

namespace fkstable {

namespace {

constexpr int kGL = 12;
constexpr Real kGLx[kGL] = {
    -0.9815606342467192, -0.9041172563704749, -0.7699026741943047, -0.5873179542866175,
    -0.3678314989981802, -0.1252334085114689, 0.1252334085114689,  0.3678314989981802,
    0.5873179542866175,  0.7699026741943047,  0.9041172563704749,  0.9815606342467192};
constexpr Real kGLw[kGL] = {
    0.0471753363865118, 0.1069393259953184, 0.1600783285433462, 0.2031674267230659,
    0.2334925365383548, 0.2491470458134028, 0.2491470458134028, 0.2334925365383548,
    0.2031674267230659, 0.1600783285433462, 0.1069393259953184, 0.0471753363865118};

template <typename F>
Real gauss_panel(F&& f, Real a, Real b) {
  const Real c = 0.5 * (a + b), h = 0.5 * (b - a);
  Real s = 0.0;
  for (int i = 0; i < kGL; ++i) s += kGLw[i] * f(c + h * kGLx[i]);
  return s * h;
}

// quintic Hermite basis on [0, 1]
inline void quintic_from_jets(Real x0, Real x1, Real f0, Real d0, Real s0, Real f1, Real d1,
                              Real s1, Real out[6]) {
  const Real L = x1 - x0;
  out[0] = f0;
  out[1] = d0 * L;
  out[2] = s0 * L * L;
  out[3] = f1;
  out[4] = d1 * L;
  out[5] = s1 * L * L;
}

inline Real quintic_eval(const Real c[6], Real s) {
  const Real s2 = s * s, s3 = s2 * s, s4 = s3 * s, s5 = s4 * s;
  const Real h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
  const Real h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
  const Real h2 = 0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5;
  const Real h3 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
  const Real h4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
  const Real h5 = 0.5 * s3 - s4 + 0.5 * s5;
  return c[0] * h0 + c[1] * h1 + c[2] * h2 + c[3] * h3 + c[4] * h4 + c[5] * h5;
}

}  // namespace

BarrierH::BarrierH(const ScalingFunction& psi) : psi_(psi) {
  closed_form_ = psi.kind() == ScalingFunction::Kind::PowerLaw;
  if (closed_form_) return;
  // frozen cumulative tables on a log grid; panels integrated with Gauss
  const int n = 2400;
  const Real lo = std::log(1e-9), hi = std::log(1e4);
  grid_.resize(n + 1);
  f_.resize(n + 1);
  g_.resize(n + 1);
  for (int i = 0; i <= n; ++i) grid_[i] = std::exp(lo + (hi - lo) * i / n);
  auto psi_fn = [&](Real u) { return psi_(u); };
  // head below grid_[0]: psi(u) <= psi(r0) (u/r0)^{beta1}/... use power bound
  const Real r0 = grid_[0];
  const Real p0 = psi_(r0);
  const Real b1 = psi_.beta1();
  f_[0] = p0 * r0 / (b1 + 1.0);  // int_0^{r0} psi ~ power-law head
  g_[0] = p0 * r0 * r0 / ((b1 + 1.0) * (b1 + 2.0));
  for (int i = 1; i <= n; ++i) {
    const Real a = grid_[i - 1], b = grid_[i];
    f_[i] = f_[i - 1] + gauss_panel(psi_fn, a, b);
    // int_0^{b}(b-u)psi = int_0^{a}(a-u)psi + (b-a) int_0^a psi + int_a^b (b-u) psi
    g_[i] = g_[i - 1] + (b - a) * f_[i - 1] +
            gauss_panel([&](Real u) { return (b - u) * psi_(u); }, a, b);
  }
}

Real BarrierH::cum_psi(Real r) const {
  auto it = std::lower_bound(grid_.begin(), grid_.end(), r);
  if (it == grid_.begin()) {
    const Real b1 = psi_.beta1();
    return psi_(r) * r / (b1 + 1.0);
  }
  const std::size_t i = (it - grid_.begin()) - 1;
  const Real a = grid_[i];
  return f_[i] + gauss_panel([&](Real u) { return psi_(u); }, a, std::min(r, grid_.back()));
}

Real BarrierH::cum_cum_psi(Real r) const {
  auto it = std::lower_bound(grid_.begin(), grid_.end(), r);
  if (it == grid_.begin()) {
    const Real b1 = psi_.beta1();
    return psi_(r) * r * r / ((b1 + 1.0) * (b1 + 2.0));
  }
  const std::size_t i = (it - grid_.begin()) - 1;
  const Real a = grid_[i];
  return g_[i] + (r - a) * f_[i] +
         gauss_panel([&](Real u) { return (r - u) * psi_(u); }, a, r);
}

Real BarrierH::value(Real r) const {
  if (!(r > 0.0)) throw std::domain_error("BarrierH: r > 0 required");
  if (closed_form_) {
    const Real b = psi_.beta();
    return 2.0 * std::pow(r, b) / ((b + 1.0) * (b + 2.0));
  }
  return 2.0 * cum_cum_psi(r) / (r * r);
}

Real BarrierH::deriv1(Real r) const {
  if (!(r > 0.0)) throw std::domain_error("BarrierH: r > 0 required");
  if (closed_form_) return psi_.beta() * value(r) / r;
  return 2.0 * cum_psi(r) / (r * r) - 4.0 * cum_cum_psi(r) / (r * r * r);
}

Real BarrierH::deriv2(Real r) const {
  if (!(r > 0.0)) throw std::domain_error("BarrierH: r > 0 required");
  if (closed_form_) {
    const Real b = psi_.beta();
    return b * (b - 1.0) * value(r) / (r * r);
  }
  return 2.0 * psi_(r) / (r * r) - 8.0 * cum_psi(r) / (r * r * r) +
         12.0 * cum_cum_psi(r) / (r * r * r * r);
}

Real BarrierH::eval(Real r, int order) const {
  switch (order) {
    case 0: return value(r);
    case 1: return deriv1(r);
    case 2: return deriv2(r);
    default: throw std::invalid_argument("BarrierH::eval: order in {0,1,2}");
  }
}

LemmaHReport lemma_H_check(const BarrierH& H, const std::vector<Real>& grid, Real tol) {
  LemmaHReport rep;
  const Real c0 = std::pow(2.0, 2.0 * H.psi().beta2() + 3.0) * H.psi().lambda() / 3.0;
  rep.worst_lower = std::numeric_limits<Real>::infinity();
  rep.pass = true;
  for (Real r : grid) {
    const Real h = H.value(r), p = H.psi()(r);
    const Real lower = c0 * h / p;
    const Real upper = h / p;
    const Real d1 = std::abs(r * H.deriv1(r)) / (2.0 * c0 * h);
    const Real d2 = std::abs(r * r * H.deriv2(r)) / (6.0 * c0 * h);
    rep.worst_lower = std::min(rep.worst_lower, lower);
    rep.worst_upper = std::max(rep.worst_upper, upper);
    rep.worst_d1 = std::max(rep.worst_d1, d1);
    rep.worst_d2 = std::max(rep.worst_d2, d2);
    if (lower < 1.0 - tol || upper > 1.0 + tol || d1 > 1.0 + tol || d2 > 1.0 + tol)
      rep.pass = false;
  }
  return rep;
}

BarrierPhi::BarrierPhi(const ModelSpec& model, Real R)
    : BarrierPhi(model, R, constants_for(model)) {}

BarrierPhi::BarrierPhi(const ModelSpec& model, Real R, const Constants& consts)
    : h_(model.psi), d_(model.d), alpha_(model.alpha), r_(R) {
  if (!(R > 0.0 && R <= 1.0)) throw std::domain_error("BarrierPhi: R in (0,1] required");
  eps0_ = consts.eps0;
  delta0_ = consts.delta0;
  plateau_ = delta0_ * std::pow(R, alpha_);
  a1_ = 4.0 * eps0_ * R;
  c1_ = std::pow(2.0, 1.0 / d_) * R;
  c2_ = std::pow(4.0, 1.0 / d_) * R;
  build();
}

void BarrierPhi::build() {
  level_ = h_.value(a1_);
  if (level_ > plateau_ * (1.0 + 1e-12))
    throw std::logic_error("BarrierPhi: H(4 eps0 R) exceeds the plateau level");
  const Real lo_bound = h_.value(eps0_ * r_);
  const Real span = r_ - a1_;

  // flattening join [a1, a1+h]: H-jet -> (level, 0, 0); shrink h until the
  // quintic stays inside [H(eps0 R), plateau]
  Real hlen = 0.45 * span;
  const Real d0 = h_.deriv1(a1_), s0 = h_.deriv2(a1_);
  for (int tries = 0; tries < 60; ++tries) {
    quintic_from_jets(a1_, a1_ + hlen, level_, d0, s0, level_, 0.0, 0.0, flat_coef_);
    bool ok = true;
    for (int i = 0; i <= 64; ++i) {
      const Real v = quintic_eval(flat_coef_, i / 64.0);
      if (v < lo_bound * (1.0 - 1e-9) || v > plateau_ * (1.0 + 1e-12)) ok = false;
    }
    if (ok) break;
    hlen *= 0.5;
    if (tries == 59) throw std::logic_error("BarrierPhi: failed to fit the flattening join");
  }
  flat_hi_ = a1_ + hlen;

  // rise [R - g, R]: (level,0,0) -> (plateau,0,0); monotone, always in range
  const Real g = 0.45 * span;
  rise_lo_ = r_ - g;
  quintic_from_jets(rise_lo_, r_, level_, 0.0, 0.0, plateau_, 0.0, 0.0, rise_coef_);

  // drop [c1, c2]: (plateau,0,0) -> (0,0,0)
  quintic_from_jets(c1_, c2_, plateau_, 0.0, 0.0, 0.0, 0.0, 0.0, drop_coef_);
}

Real BarrierPhi::value(Real r) const {
  if (r < 0.0) throw std::domain_error("BarrierPhi: r >= 0 required");
  if (r == 0.0) return 0.0;  // limit H(0+) = 0
  if (r < a1_) return h_.value(r);
  if (r < flat_hi_) return quintic_eval(flat_coef_, (r - a1_) / (flat_hi_ - a1_));
  if (r < rise_lo_) return level_;
  if (r < r_) return quintic_eval(rise_coef_, (r - rise_lo_) / (r_ - rise_lo_));
  if (r < c1_) return plateau_;
  if (r < c2_) return quintic_eval(drop_coef_, (r - c1_) / (c2_ - c1_));
  return 0.0;
}

std::vector<Real> BarrierPhi::junctions() const {
  return {a1_, flat_hi_, rise_lo_, r_, c1_, c2_};
}

namespace {

// spherical average of a radial profile over the sphere |y - x| = u
class SphereAverage {
 public:
  SphereAverage(const std::function<Real(Real)>& profile, int d, int theta_points)
      : profile_(profile), d_(d) {
    if (d_ >= 2) {
      // Gauss nodes for the polar angle, weight sin^{d-2}(theta)
      const int m = theta_points;
      nodes_.resize(m);
      weights_.resize(m);
      Real norm = 0.0;
      for (int i = 0; i < m; ++i) {
        // composite midpoint in theta keeps the weight evaluation simple
        const Real th = std::numbers::pi * (i + 0.5) / m;
        nodes_[i] = std::cos(th);
        weights_[i] = std::pow(std::sin(th), d_ - 2);
        norm += weights_[i];
      }
      for (auto& w : weights_) w /= norm;
    }
  }

  Real operator()(Real r, Real u) const {
    if (d_ == 1) return 0.5 * (profile_(std::abs(r - u)) + profile_(r + u));
    Real s = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const Real rho = std::sqrt(std::max(0.0, r * r + u * u + 2.0 * r * u * nodes_[i]));
      s += weights_[i] * profile_(rho);
    }
    return s;
  }

 private:
  const std::function<Real(Real)>& profile_;
  int d_;
  std::vector<Real> nodes_, weights_;
};

Real pv_once(const std::function<Real(Real)>& profile, const SphereAverage& avg, Real r,
             Real support, int d, Real alpha, int panels_per_decade, int subdiv,
             const std::vector<Real>& extra_breaks) {
  // integrand (avg(u) - profile(r)) u^{-1-alpha} on (0, r + support]; exact
  // power tail beyond, where avg vanishes
  const Real fr = profile(r);
  const Real u_max = r + support;
  const Real u_min = std::max(1e-14 * std::max(r, support), 1e-300);

  std::vector<Real> cuts;
  cuts.push_back(u_min);
  const Real decades = std::log10(u_max / u_min);
  const int n_log = std::max(8, static_cast<int>(decades * panels_per_decade));
  for (int i = 1; i < n_log; ++i)
    cuts.push_back(u_min * std::pow(u_max / u_min, static_cast<Real>(i) / n_log));
  for (Real b : extra_breaks) {
    for (Real c : {std::abs(r - b), r + b})
      if (c > u_min && c < u_max) cuts.push_back(c);
  }
  cuts.push_back(u_max);
  std::sort(cuts.begin(), cuts.end());

  auto f = [&](Real u) { return (avg(r, u) - fr) * std::pow(u, -1.0 - alpha); };
  Real s = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const Real a = cuts[i], b = cuts[i + 1];
    if (!(b > a)) continue;
    if (subdiv <= 1) {
      s += gauss_panel(f, a, b);
    } else {
      for (int j = 0; j < subdiv; ++j)
        s += gauss_panel(f, a + (b - a) * j / subdiv, a + (b - a) * (j + 1) / subdiv);
    }
  }
  // head below u_min: |avg - f(r)| <= C u^2, negligible against abs_tol
  // tail: avg = 0 for u > u_max
  s += -fr * std::pow(u_max, -alpha) / alpha;
  return s * sphere_area(d);
}

PvResult pv_driver(const std::function<Real(Real)>& profile, Real support,
                   const ModelSpec& model, Real r, const QuadratureSpec& quad,
                   const std::vector<Real>& breaks) {
  SphereAverage avg(profile, model.d, quad.theta_points);
  SphereAverage avg_fine(profile, model.d, 2 * quad.theta_points);
  const Real A = stable_constant(model.d, model.alpha);

  PvResult res;
  Real coarse = pv_once(profile, avg, r, support, model.d, model.alpha,
                        quad.base_panels_per_decade, 1, breaks);
  for (int ref = 1; ref <= quad.max_refine; ++ref) {
    const Real fine = pv_once(profile, avg_fine, r, support, model.d, model.alpha,
                              quad.base_panels_per_decade, 1 << ref, breaks);
    res.value = A * fine;
    res.error = A * std::abs(fine - coarse);
    if (res.error <= std::max(quad.abs_tol, quad.rel_tol * std::abs(res.value))) {
      res.converged = true;
      return res;
    }
    coarse = fine;
  }
  return res;
}

}  // namespace

PvResult frac_laplacian_pv(const BarrierPhi& phi, const ModelSpec& model, const Point& x,
                           const QuadratureSpec& quad) {
  const Real r = x.norm();
  if (!(r > 0.0 && r < phi.eps0() * phi.R()))
    throw std::domain_error("frac_laplacian_pv: 0 < |x| < eps0 R required");
  std::function<Real(Real)> profile = [&phi](Real s) { return phi.value(s); };
  auto breaks = phi.junctions();
  breaks.push_back(r);          // the profile argument |r - u| folds at u = r
  breaks.push_back(0.5 * r);    // symmetrized-ball boundary of the proof split
  breaks.push_back(3.0 * r);
  return pv_driver(profile, phi.junctions().back(), model, r, quad, breaks);
}

PvResult frac_laplacian_pv_radial(const std::function<Real(Real)>& profile, Real support_radius,
                                  const ModelSpec& model, Real r, const QuadratureSpec& quad) {
  std::vector<Real> breaks = {r, 0.5 * r, 3.0 * r, support_radius};
  return pv_driver(profile, support_radius, model, r, quad, breaks);
}

GeneratorCheckReport generator_check(const BarrierPhi& phi, const ModelSpec& model,
                                     const std::vector<Real>& radii, const QuadratureSpec& quad,
                                     Real tol) {
  const Constants c = constants_for(model);
  GeneratorCheckReport rep;
  rep.threshold = -1.0 / (4.0 * c.c0 * model.psi.lambda());
  rep.pass = true;
  for (Real r : radii) {
    GeneratorCheckPoint pt;
    pt.radius = r;
    Point x(model.d);
    x.setZero();
    x(0) = r;
    const PvResult pv = frac_laplacian_pv(phi, model, x, quad);
    pt.pv = pv.value;
    pt.pv_error = pv.error;
    pt.quad_ok = pv.converged;
    pt.margin = pv.value - 0.5 * model.kappa.radial(r) * phi.H().value(r);
    pt.pass = pt.quad_ok && pt.margin <= rep.threshold + tol;
    if (!pt.pass) rep.pass = false;
    rep.points.push_back(pt);
  }
  return rep;
}

}  // namespace fkstable
