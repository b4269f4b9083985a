#include "fkstable/envelopes.hpp"

#include <cmath>
#include <limits>

namespace fkstable {

namespace {
inline Real cap1(Real v) { return std::min(1.0, v); }
}

Real wtq(int d, Real alpha, Real t, Real r) {
  if (!(t > 0.0)) throw std::domain_error("wtq: t > 0 required");
  const Real ti = std::pow(t, 1.0 / alpha);
  const Real f = r > 0.0 ? cap1(ti / r) : 1.0;
  return std::pow(t, -static_cast<Real>(d) / alpha) * std::pow(f, d + alpha);
}

Real wtq(const ModelSpec& model, Real t, const Point& x, const Point& y) {
  return wtq(model.d, model.alpha, t, (x - y).norm());
}

EnvelopeValue small_time_envelope(const ModelSpec& model, Real t, const Point& x, const Point& y,
                                  Side side, Real lambda, Real T) {
  if (!(t > 0.0 && t <= T)) throw std::domain_error("small_time_envelope: 0 < t <= T required");
  const Real ax = x.norm(), ay = y.norm();
  if (!(ax > 0.0 && ay > 0.0)) throw std::domain_error("small_time_envelope: x, y != 0");
  const int d = model.d;
  const Real alpha = model.alpha;
  const Real r = (x - y).norm();

  const Real pre = cap1(model.psi(ax) / t) * cap1(model.psi(ay) / t);
  const Real first = std::exp(-lambda * t / model.psi(std::max(ax, ay))) * wtq(d, alpha, t, r);
  const Real pinv = model.psi.inverse(t);
  const Real distf = r > 0.0 ? cap1(pinv / r) : 1.0;
  const Real second =
      t * t * std::pow(pinv, -(d + 2.0 * alpha)) * std::pow(distf, d + 2.0 * alpha);

  return {pre * (first + second),
          side == Side::Upper ? EnvelopeRegime::SmallUpper : EnvelopeRegime::SmallLower};
}

EnvelopeValue global_upper(const ModelSpec& model, Real t, const Point& x, const Point& y) {
  if (!(t > 0.0)) throw std::domain_error("global_upper: t > 0 required");
  const Real t1 = std::min(t, 1.0);
  const Real pre = cap1(model.psi(x.norm()) / t1) * cap1(model.psi(y.norm()) / t1);
  return {pre * wtq(model, t, x, y), EnvelopeRegime::GlobalUpper};
}

Real large_time_factor(const ModelSpec& model, Real t, Real r) {
  const Real alpha = model.alpha;
  switch (model.regime()) {
    case Regime::Transient:
      return cap1(model.psi(r));
    case Regime::Recurrent:
      return cap1(std::min(model.psi(r), std::pow(r, alpha - 1.0)) /
                  std::pow(t, (alpha - 1.0) / alpha));
    case Regime::Critical:
      return cap1(std::min(model.psi(r), log_fn(r)) / log_fn(t));
  }
  return 1.0;
}

EnvelopeValue large_time_envelope(const ModelSpec& model, Real t, const Point& x, const Point& y) {
  if (!(t >= 2.0)) throw std::domain_error("large_time_envelope: t >= 2 required");
  EnvelopeRegime reg = EnvelopeRegime::LargeTransient;
  if (model.regime() == Regime::Recurrent) reg = EnvelopeRegime::LargeRecurrent;
  if (model.regime() == Regime::Critical) reg = EnvelopeRegime::LargeCritical;
  const Real v = large_time_factor(model, t, x.norm()) * large_time_factor(model, t, y.norm()) *
                 wtq(model, t, x, y);
  return {v, reg};
}

EnvelopeValue green_envelope(const ModelSpec& model, const Point& x, const Point& y) {
  const Real ax = x.norm(), ay = y.norm();
  if (!(ax > 0.0 && ay > 0.0)) throw std::domain_error("green_envelope: x, y != 0");
  const int d = model.d;
  const Real alpha = model.alpha;
  const Real r = (x - y).norm();
  const Regime reg = model.regime();

  if (r == 0.0 && reg != Regime::Recurrent)
    return {std::numeric_limits<Real>::infinity(),
            reg == Regime::Transient ? EnvelopeRegime::GreenTransient
                                     : EnvelopeRegime::GreenCritical};

  const Real r1 = std::min(r, 1.0);
  const Real px = std::min(model.psi(ax), 1.0), py = std::min(model.psi(ay), 1.0);

  switch (reg) {
    case Regime::Transient: {
      const Real v = cap1(px / std::pow(r1, alpha)) * cap1(py / std::pow(r1, alpha)) *
                     std::pow(r, -(d - alpha));
      return {v, EnvelopeRegime::GreenTransient};
    }
    case Regime::Recurrent: {
      const Real rv = std::max(r, 1.0);
      const Real v =
          cap1(px / std::pow(r1, alpha)) * cap1(py / std::pow(r1, alpha)) *
          std::pow(cap1(std::max(ax, 1.0) / rv), alpha - 1.0) *
          std::pow(cap1(std::max(ay, 1.0) / rv), alpha - 1.0) *
          std::pow(std::max(std::min(model.psi(ax), std::pow(ax, alpha)), std::pow(r, alpha)),
                   (alpha - 1.0) / (2.0 * alpha)) *
          std::pow(std::max(std::min(model.psi(ay), std::pow(ay, alpha)), std::pow(r, alpha)),
                   (alpha - 1.0) / (2.0 * alpha));
      return {v, EnvelopeRegime::GreenRecurrent};
    }
    case Regime::Critical: {
      const Real v = cap1(px / r1) * cap1(py / r1) *
                     std::sqrt(cap1(log_fn(ax) / log_fn(r)) * cap1(log_fn(ay) / log_fn(r))) *
                     std::sqrt(log_fn(std::min(model.psi(ax), ax) / r1) *
                               log_fn(std::min(model.psi(ay), ay) / r1));
      return {v, EnvelopeRegime::GreenCritical};
    }
  }
  return {};
}

EnvelopeValue green_small_regime(const ModelSpec& model, const Point& x, const Point& y) {
  const Real ax = x.norm(), ay = y.norm();
  if (!(ax > 0.0 && ay > 0.0)) throw std::domain_error("green_small_regime: x, y != 0");
  const Real r = (x - y).norm();
  const Real pmin = model.psi(std::min(ax, ay));
  if (std::max(r, pmin) > 1.0)
    throw std::domain_error("green_small_regime: requires |x-y| v psi(|x|^|y|) <= 1");

  const int d = model.d;
  const Real alpha = model.alpha;
  EnvelopeRegime reg = EnvelopeRegime::GreenTransient;
  if (model.regime() == Regime::Recurrent) reg = EnvelopeRegime::GreenRecurrent;
  if (model.regime() == Regime::Critical) reg = EnvelopeRegime::GreenCritical;

  if (std::pow(r, alpha) > pmin)
    return {model.psi(ax) * model.psi(ay) / std::pow(r, d + alpha), reg};

  switch (model.regime()) {
    case Regime::Transient:
      return {std::pow(r, alpha - d), reg};
    case Regime::Recurrent:
      return {std::pow(pmin, (alpha - 1.0) / alpha), reg};
    case Regime::Critical:
      return {log_fn(pmin / r), reg};
  }
  return {};
}

BoundaryFactor dirichlet_factor(const ModelSpec& model, const Geometry& geom, Real t,
                                const Point& w, Real k) {
  if (!(t > 0.0)) throw std::domain_error("dirichlet_factor: t > 0 required");
  const Real alpha = model.alpha;
  const Real R = geom.radius;
  const Real dist = (w - geom.center).norm();

  if (geom.kind == Geometry::Kind::Ball) {
    if (dist >= R) throw std::domain_error("dirichlet_factor: w outside the ball");
    if (t > std::pow(k * R, alpha))
      throw std::domain_error("dirichlet_factor: ball factor needs t <= (kR)^alpha");
    const Real delta = R - dist;
    return {cap1(std::pow(delta, 0.5 * alpha) / std::sqrt(t)), BoundaryFactor::Case::Ball};
  }

  if (dist <= R) throw std::domain_error("dirichlet_factor: w inside the excluded ball");
  const Real delta = dist - R;
  switch (model.regime()) {
    case Regime::Transient: {
      const Real v = cap1(std::pow(std::min(delta, R), 0.5 * alpha) /
                          std::sqrt(std::min(t, std::pow(R, alpha))));
      return {v, BoundaryFactor::Case::ExteriorTransient};
    }
    case Regime::Recurrent: {
      const Real num = std::pow(delta, alpha - 1.0) *
                       std::pow(std::min(delta, R), 0.5 * (2.0 - alpha));
      const Real den = std::pow(t, (alpha - 1.0) / alpha) *
                       std::pow(std::min(t, std::pow(R, alpha)), (2.0 - alpha) / (2.0 * alpha));
      return {cap1(num / den), BoundaryFactor::Case::ExteriorRecurrent};
    }
    case Regime::Critical: {
      const Real num = std::sqrt(std::min(delta, R)) * log_fn(delta / R);
      const Real den = std::sqrt(std::min(t, R)) * log_fn(t / R);
      return {cap1(num / den), BoundaryFactor::Case::ExteriorCritical};
    }
  }
  return {};
}

BoundaryFactor h_factor(const ModelSpec& model, Real R, Real s, const Point& z) {
  if (model.regime() != Regime::Recurrent)
    throw std::domain_error("h_factor: requires d = 1 < alpha");
  if (!(R >= 1.0 && s > 0.0)) throw std::domain_error("h_factor: R >= 1, s > 0 required");
  const Real az = z.norm();
  if (!(az > R)) throw std::domain_error("h_factor: |z| > R required");
  const Real alpha = model.alpha;
  return {cap1(std::pow(az, alpha - 1.0) / std::pow(s, (alpha - 1.0) / alpha)),
          BoundaryFactor::Case::HR};
}

BoundaryFactor f_factor(const ModelSpec& model, Real R, Real s, const Point& z) {
  if (model.regime() != Regime::Critical)
    throw std::domain_error("f_factor: requires d = 1 = alpha");
  if (!(R >= 1.0 && s > 0.0)) throw std::domain_error("f_factor: R >= 1, s > 0 required");
  const Real az = z.norm();
  if (!(az > R)) throw std::domain_error("f_factor: |z| > R required");
  return {cap1(log_fn(az / R) / log_fn(s / R)), BoundaryFactor::Case::FR};
}

DominantBoundReport dominant_bound_check(const ModelSpec& model, Real T,
                                         const std::vector<Real>& t_grid,
                                         const std::vector<Real>& r_grid) {
  DominantBoundReport rep;
  const int d = model.d;
  const Real alpha = model.alpha;
  for (Real t : t_grid) {
    if (!(t > 0.0 && t <= T)) continue;
    const Real pinv = model.psi.inverse(t);
    for (Real r : r_grid) {
      const Real lhs = t * t * std::pow(pinv, -(d + 2.0 * alpha)) *
                       std::pow(cap1(pinv / r), d + 2.0 * alpha);
      const Real rhs = wtq(d, alpha, t, r);
      const Real c = lhs / rhs;
      if (c > rep.fitted_c) {
        rep.fitted_c = c;
        rep.worst_t = t;
        rep.worst_r = r;
      }
    }
  }
  return rep;
}

}  // namespace fkstable
