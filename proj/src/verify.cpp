#include "fkstable/verify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

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

}  // namespace

FitReport sandwich_fit(const std::string& check_id, std::uint64_t model_hash,
                       std::vector<SweepPoint> points, Real ceiling) {
  FitReport rep;
  rep.check_id = check_id;
  rep.model_hash_ = model_hash;
  rep.ceiling = ceiling;
  for (auto& p : points) {
    const Real band = 3.0 * p.stderr_;
    const bool lo_ok = std::isfinite(p.lower_env) && p.lower_env > 0.0;
    const bool hi_ok = std::isfinite(p.upper_env) && p.upper_env > 0.0;
    if (!lo_ok && !hi_ok) {
      p.excluded = true;
      ++rep.excluded;
      continue;
    }
    p.ratio_lo = lo_ok ? p.lower_env / std::max(p.estimate + band, 1e-300) : 0.0;
    p.ratio_hi = hi_ok ? std::max(0.0, p.estimate - band) / p.upper_env : 0.0;
    rep.fitted_c_lower = std::max(rep.fitted_c_lower, p.ratio_lo);
    rep.fitted_c_upper = std::max(rep.fitted_c_upper, p.ratio_hi);
  }
  rep.points = std::move(points);
  rep.pass = rep.fitted_c() <= ceiling && rep.excluded < rep.points.size();
  return rep;
}

Real three_p_ratio(int d, Real alpha, Real t, Real s, const Point& x, const Point& y,
                   const Point& z) {
  if (!(0.0 < s && s < t)) throw std::domain_error("three_p_ratio: 0 < s < t required");
  const Real q1 = wtq(d, alpha, t - s, (x - z).norm());
  const Real q2 = wtq(d, alpha, s, (z - y).norm());
  const Real q3 = wtq(d, alpha, t, (x - y).norm());
  const Real q4 = wtq(d, alpha, s, (y - z).norm());
  return q1 * q2 / (q3 * (q1 + q4));
}

ThreePReport three_p_check(int d, Real alpha, std::size_t n_samples, std::uint64_t seed) {
  ThreePReport rep;
  rep.n = n_samples;
  {
    Point o = Point::Zero(d);
    rep.analytic_point = three_p_ratio(d, alpha, 1.0, 0.5, o, o, o);
  }
  auto heavy = [&](Philox& rng, Point& p) {
    for (int i = 0; i < d; ++i) {
      const Real u = rng.next_uniform();
      if (u < 0.5) {
        p(i) = rng.next_normal();
      } else {
        p(i) = std::tan(std::numbers::pi * (rng.next_uniform() - 0.5));
      }
    }
  };
  Real cmax = 0.0;
  Point x(d), y(d), z(d);
  for (std::size_t i = 0; i < n_samples; ++i) {
    Philox rng(seed, i);
    const Real t = std::exp(-3.0 + 4.0 * rng.next_uniform());
    const Real s = t * std::min(0.999, std::max(0.001, rng.next_uniform()));
    heavy(rng, x);
    heavy(rng, y);
    heavy(rng, z);
    cmax = std::max(cmax, three_p_ratio(d, alpha, t, s, x, y, z));
    if (i + 1 == n_samples / 4) rep.fitted_c_quarter = cmax;
    if (i + 1 == n_samples / 2) rep.fitted_c_half = cmax;
  }
  rep.fitted_c = cmax;
  return rep;
}

namespace {

// regime boundary factor of the excluded-ball exterior, evaluated at radius a
Real exterior_regime_factor(const ModelSpec& model, Real R, Real s, Real a) {
  const Real alpha = model.alpha;
  switch (model.regime()) {
    case Regime::Transient: {
      const Real delta = a - R;
      return std::min(1.0, std::pow(std::min(delta, R), 0.5 * alpha) /
                               std::sqrt(std::min(s, std::pow(R, alpha))));
    }
    case Regime::Recurrent:
      return std::min(1.0, std::pow(a, alpha - 1.0) / std::pow(s, (alpha - 1.0) / alpha));
    case Regime::Critical:
      return std::min(1.0, log_fn(a / R) / log_fn(s / R));
  }
  return 1.0;
}

Real one_step_impl(const ModelSpec& model, Real R, Real t, Real x, Real y, Real s_lo, Real s_hi,
                   bool unit_z_factors) {
  if (model.d != 1) throw std::domain_error("one_step_integral: d = 1 quadrature only");
  if (!(R >= 1.0)) throw std::domain_error("one_step_integral: R >= 1 required");
  if (!(t >= std::pow(R, model.alpha) * (1.0 - 1e-12)))
    throw std::domain_error("one_step_integral: t >= R^alpha required");
  if (std::abs(x) <= 2.0 * R || std::abs(y) <= 2.0 * R)
    throw std::domain_error("one_step_integral: x, y outside B(0, 2R) required");
  const Real alpha = model.alpha;
  const Real b1 = model.psi.beta1();
  const Real lam2 = model.psi.lambda() * model.psi.lambda();

  const Real z_max = std::max({64.0 * R, 8.0 * (std::abs(x) + std::abs(y)),
                               8.0 * std::pow(t, 1.0 / alpha)});

  auto inner_z = [&](Real s) {
    const Real ts = t - s;
    const Real w1 = std::pow(s, 1.0 / alpha), w2 = std::pow(ts, 1.0 / alpha);
    // breakpoints in |z| on each signed ray
    auto ray = [&](int sign) {
      std::vector<Real> cuts = {R, 2.0 * R, z_max};
      for (Real c : {std::abs(x) , std::abs(y)}) cuts.push_back(c);
      for (Real p : {x, y}) {
        const Real ps = sign > 0 ? p : -p;
        for (Real off : {-4.0 * w1, -w1, 0.0, w1, 4.0 * w1, -4.0 * w2, -w2, w2, 4.0 * w2})
          if (ps + off > R && ps + off < z_max) cuts.push_back(ps + off);
      }
      std::sort(cuts.begin(), cuts.end());
      cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
      Real acc = 0.0;
      for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const Real a = cuts[i], b = cuts[i + 1];
        if (!(b > a) || a < R) continue;
        const int sub = (b / a > 4.0) ? 4 : 1;  // extra panels on wide log spans
        for (int j = 0; j < sub; ++j) {
          const Real aa = a * std::pow(b / a, static_cast<Real>(j) / sub);
          const Real bb = a * std::pow(b / a, static_cast<Real>(j + 1) / sub);
          const Real c = 0.5 * (aa + bb), h = 0.5 * (bb - aa);
          for (int gq = 0; gq < kGL; ++gq) {
            const Real az = c + h * kGLx[gq];
            const Real z = sign * az;
            Real fz = 1.0;
            if (!unit_z_factors)
              fz = exterior_regime_factor(model, R, s, az) *
                   exterior_regime_factor(model, R, ts, az);
            const Real qq = wtq(1, alpha, s, std::abs(x - z)) +
                            wtq(1, alpha, ts, std::abs(y - z));
            acc += kGLw[gq] * h * fz * qq * lam2 * std::pow(az, -b1);
          }
        }
      }
      return acc;
    };
    const Real fx = exterior_regime_factor(model, R, s, std::abs(x));
    const Real fy = exterior_regime_factor(model, R, ts, std::abs(y));
    return fx * fy * (ray(+1) + ray(-1));
  };

  // s panels: graded toward both endpoints, split at R^alpha from either end
  std::vector<Real> scuts = {s_lo, s_hi};
  const Real ra = std::pow(R, alpha);
  for (Real c : {ra, t - ra, 0.5 * t}) {
    if (c > s_lo && c < s_hi) scuts.push_back(c);
  }
  for (int j = 1; j <= 6; ++j) {
    const Real off = (s_hi - s_lo) * std::pow(4.0, -j) ;
    if (s_lo + off < s_hi) scuts.push_back(s_lo + off);
    if (s_hi - off > s_lo) scuts.push_back(s_hi - off);
  }
  std::sort(scuts.begin(), scuts.end());
  scuts.erase(std::unique(scuts.begin(), scuts.end()), scuts.end());

  Real total = 0.0;
  for (std::size_t i = 0; i + 1 < scuts.size(); ++i) {
    const Real a = scuts[i], b = scuts[i + 1];
    if (!(b > a)) continue;
    const int sub = 2;
    for (int j = 0; j < sub; ++j) {
      const Real aa = a + (b - a) * j / sub, bb = a + (b - a) * (j + 1) / sub;
      const Real c = 0.5 * (aa + bb), h = 0.5 * (bb - aa);
      for (int gq = 0; gq < kGL; ++gq) total += kGLw[gq] * h * inner_z(c + h * kGLx[gq]);
    }
  }
  const Real fx = exterior_regime_factor(model, R, t, std::abs(x));
  const Real fy = exterior_regime_factor(model, R, t, std::abs(y));
  return total / (fx * fy);
}

}  // namespace

Real one_step_integral(const ModelSpec& model, Real R, Real t, Real x, Real y) {
  const Real eps = 1e-9 * t;
  return one_step_impl(model, R, t, x, y, eps, t - eps, false);
}

Real one_step_integral_window(const ModelSpec& model, Real R, Real t, Real x, Real y, Real s_lo,
                              Real s_hi, bool unit_factors) {
  return one_step_impl(model, R, t, x, y, std::max(s_lo, 1e-9 * t),
                       std::min(s_hi, t * (1.0 - 1e-9)), unit_factors);
}

namespace {

ModelSpec halved_potential(const ModelSpec& model) {
  ModelSpec m = model;
  if (model.kappa.kind() == KillingPotential::Kind::PowerLaw) {
    m.kappa = KillingPotential::power_law(0.5 * model.kappa.b(), model.kappa.beta());
  } else {
    const KillingPotential& k = model.kappa;
    m.kappa = KillingPotential::custom([k](Real r) { return 0.5 * k.radial(r); },
                                       k.class_tag());
  }
  return m;
}

Point pt1(Real v) { return point1(v); }

}  // namespace

std::vector<FitReport> survival_bound_suite(const ModelSpec& model,
                                            const SurvivalSuiteConfig& cfg) {
  std::vector<FitReport> out;
  const std::uint64_t mh = model_hash(model);
  const auto& psi = model.psi;
  const Real alpha = model.alpha;
  const Real inf = std::numeric_limits<Real>::infinity();
  const Real rho = cfg.ball_radius;

  // Lemma 3.7 shape: P_x(zeta^{kappa/2} > t) <= C (1 ^ psi(|x|)/t)
  {
    const ModelSpec half = halved_potential(model);
    std::vector<SweepPoint> pts;
    std::uint64_t salt = 0;
    for (Real ax : {0.05, 0.1, 0.2, 0.4, 0.8}) {
      for (Real t : {0.125, 0.25, 0.5, 1.0}) {
        const MCEstimate e =
            estimate_survival(half, pt1(ax), t, cfg.n, cfg.dt, cfg.seed + salt++, cfg.threads);
        SweepPoint p;
        p.t = t;
        p.x = ax;
        p.estimate = e.mean;
        p.stderr_ = e.stderr_;
        p.lower_env = 0.0;
        p.upper_env = std::min(1.0, psi(ax) / t);
        pts.push_back(p);
      }
    }
    out.push_back(sandwich_fit("survival_upper_l37", mh, std::move(pts), cfg.ceiling));
  }

  // Lemma 3.6 shape: P_x(exit of B(0, rho) happens alive) <= C psi(|x|)/psi(rho)
  {
    std::vector<SweepPoint> pts;
    std::uint64_t salt = 100;
    for (Real ball : {rho, 2.0 * rho, 4.0 * rho}) {
      for (Real frac : {0.1, 0.25, 0.5}) {
        const Real ax = frac * ball;
        const Real horizon = 8.0 * psi(ball);
        const ExitResult e =
            estimate_exit(model, pt1(ax), Point::Zero(1), ball, horizon, cfg.n, cfg.dt,
                          cfg.seed + salt++, ExitMode::ExitProbBefore, horizon, cfg.threads);
        SweepPoint p;
        p.t = horizon;
        p.x = ax;
        p.y = ball;
        p.estimate = e.est.mean;
        p.stderr_ = e.est.stderr_;
        p.upper_env = psi(ax) / psi(ball);
        pts.push_back(p);
      }
    }
    out.push_back(sandwich_fit("exit_alive_upper_l36", mh, std::move(pts), cfg.ceiling));
  }

  // Prop 3.5 shape: E_x[tau^kappa of B(0, rho)] <= C psi(|x|)
  {
    std::vector<SweepPoint> pts;
    std::uint64_t salt = 200;
    for (Real ball : {rho, 2.0 * rho}) {
      for (Real frac : {0.1, 0.25, 0.5, 0.8}) {
        const Real ax = frac * ball;
        const Real horizon = 10.0 * psi(ball);
        const ExitResult e =
            estimate_exit(model, pt1(ax), Point::Zero(1), ball, horizon, cfg.n, cfg.dt,
                          cfg.seed + salt++, ExitMode::MeanExitTime, 0.0, cfg.threads);
        SweepPoint p;
        p.t = horizon;
        p.x = ax;
        p.y = ball;
        p.estimate = e.est.mean;
        p.stderr_ = e.est.stderr_;
        p.upper_env = psi(ax);
        pts.push_back(p);
      }
    }
    out.push_back(sandwich_fit("exit_time_upper_p35", mh, std::move(pts), cfg.ceiling));
  }

  // Lemma 2.7 lower: P_x(tau^kappa of B(x, |x|/2) >= psi(|x|/2)) >= c
  {
    std::vector<SweepPoint> pts;
    std::uint64_t salt = 300;
    for (Real ax : {0.05, 0.1, 0.2, 0.4, 0.7, 1.0}) {
      const Real s = psi(0.5 * ax);
      const ExitResult e =
          estimate_exit(model, pt1(ax), pt1(ax), 0.5 * ax, s, cfg.n,
                        std::min(cfg.dt, s / 64.0), cfg.seed + salt++, ExitMode::SurvivesTo, s,
                        cfg.threads);
      SweepPoint p;
      p.t = s;
      p.x = ax;
      p.estimate = e.est.mean;
      p.stderr_ = e.est.stderr_;
      p.lower_env = 1.0;
      p.upper_env = inf;
      pts.push_back(p);
    }
    out.push_back(
        sandwich_fit("exit_survival_lower_l27", mh, std::move(pts), 1.0 / cfg.lower_floor));
  }

  // Cor 2.8 lower: E_x[tau^kappa of B(x, |x|/2)] >= c psi(|x|/2)
  {
    std::vector<SweepPoint> pts;
    std::uint64_t salt = 400;
    for (Real ax : {0.05, 0.1, 0.2, 0.4, 0.7, 1.0}) {
      const Real s = psi(0.5 * ax);
      const ExitResult e =
          estimate_exit(model, pt1(ax), pt1(ax), 0.5 * ax, 8.0 * s, cfg.n,
                        std::min(cfg.dt, s / 64.0), cfg.seed + salt++, ExitMode::MeanExitTime,
                        0.0, cfg.threads);
      SweepPoint p;
      p.t = s;
      p.x = ax;
      p.estimate = e.est.mean;
      p.stderr_ = e.est.stderr_;
      p.lower_env = s;
      p.upper_env = inf;
      pts.push_back(p);
    }
    out.push_back(
        sandwich_fit("exit_time_lower_c28", mh, std::move(pts), 1.0 / cfg.lower_floor));
  }

  // Prop 2.1, free process: P_x(tau of B(x, R) <= t) <= C t R^{-alpha}
  {
    ModelSpec free = model;
    free.kappa = KillingPotential::zero();
    std::vector<SweepPoint> pts;
    std::uint64_t salt = 500;
    for (Real R : {0.5, 1.0, 2.0}) {
      for (Real tf : {0.05, 0.15, 0.4}) {
        const Real t = tf * std::pow(R, alpha);
        const ExitResult e =
            estimate_exit(free, pt1(0.0 + 1e-9), pt1(0.0 + 1e-9), R, t, cfg.n,
                          std::min(cfg.dt, t / 64.0), cfg.seed + salt++,
                          ExitMode::ExitProbBefore, t, cfg.threads);
        SweepPoint p;
        p.t = t;
        p.y = R;
        p.estimate = e.est.mean;
        p.stderr_ = e.est.stderr_;
        p.upper_env = t * std::pow(R, -alpha);
        pts.push_back(p);
      }
    }
    out.push_back(sandwich_fit("exit_free_upper_p21", mh, std::move(pts), cfg.ceiling));
  }

  // Lemma 3.8 shape: P_x(tau^{kappa/2} of B(0, 3r) < t ^ zeta) <=
  //   C psi(|x|) r^{-alpha} (1 v t/psi(r))
  {
    const ModelSpec half = halved_potential(model);
    std::vector<SweepPoint> pts;
    std::uint64_t salt = 600;
    for (Real r : {0.15, 0.3}) {
      for (Real frac : {0.2, 0.6}) {
        for (Real t : {0.25, 1.0}) {
          const Real ax = frac * r;
          const ExitResult e =
              estimate_exit(half, pt1(ax), Point::Zero(1), 3.0 * r, t, cfg.n, cfg.dt,
                            cfg.seed + salt++, ExitMode::ExitProbBefore, t, cfg.threads);
          SweepPoint p;
          p.t = t;
          p.x = ax;
          p.y = r;
          p.estimate = e.est.mean;
          p.stderr_ = e.est.stderr_;
          p.upper_env =
              psi(ax) * std::pow(r, -alpha) * std::max(1.0, t / psi(r));
          pts.push_back(p);
        }
      }
    }
    out.push_back(sandwich_fit("ep_upper_l38", mh, std::move(pts), cfg.ceiling));
  }

  return out;
}

void emit_report(const std::vector<FitReport>& reports, const std::string& path,
                 std::uint64_t seed, const std::string& version) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_report: cannot open " + path);
  out.precision(17);
  std::uint64_t mh = reports.empty() ? 0 : reports.front().model_hash_;
  out << "# model_hash=" << mh << " seed=" << seed << " version=" << version << "\n";
  out << "kind,check_id,model_hash,fitted_C_lower,fitted_C_upper,pass,ceiling,"
         "t,x,y,estimate,stderr,lower_env,upper_env,ratio_lo,ratio_hi\n";
  for (const auto& r : reports) {
    out << "summary," << r.check_id << ',' << r.model_hash_ << ',' << r.fitted_c_lower << ','
        << r.fitted_c_upper << ',' << (r.pass ? 1 : 0) << ',' << r.ceiling
        << ",,,,,,,,,\n";
    for (const auto& p : r.points) {
      if (p.excluded) continue;
      out << "point," << r.check_id << ",,,,,," << p.t << ',' << p.x << ',' << p.y << ','
          << p.estimate << ',' << p.stderr_ << ',' << p.lower_env << ',' << p.upper_env << ','
          << p.ratio_lo << ',' << p.ratio_hi << '\n';
    }
  }
}

std::vector<FitReport> parse_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("parse_report: cannot open " + path);
  std::vector<FitReport> out;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    return cells;
  };
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("kind,", 0) == 0) continue;
    const auto cells = split(line);
    if (cells[0] == "summary") {
      FitReport r;
      r.check_id = cells[1];
      r.model_hash_ = std::stoull(cells[2]);
      r.fitted_c_lower = std::stod(cells[3]);
      r.fitted_c_upper = std::stod(cells[4]);
      r.pass = cells[5] == "1";
      r.ceiling = std::stod(cells[6]);
      out.push_back(std::move(r));
    } else if (cells[0] == "point" && !out.empty()) {
      SweepPoint p;
      p.t = std::stod(cells[7]);
      p.x = std::stod(cells[8]);
      p.y = std::stod(cells[9]);
      p.estimate = std::stod(cells[10]);
      p.stderr_ = std::stod(cells[11]);
      p.lower_env = std::stod(cells[12]);
      p.upper_env = cells[13] == "inf" ? std::numeric_limits<Real>::infinity()
                                       : std::stod(cells[13]);
      p.ratio_lo = std::stod(cells[14]);
      p.ratio_hi = std::stod(cells[15]);
      out.back().points.push_back(p);
    }
  }
  return out;
}

}  // namespace fkstable
