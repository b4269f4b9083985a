#include "fkstable/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fkstable/parallel.hpp"
#include "fkstable/special.hpp"

namespace fkstable {

namespace {

constexpr std::size_t kBlock = 4096;
constexpr int kMaxDim = 8;

struct Walker {
  // flattened hot-path state; positions live in a fixed stack buffer
  const ModelSpec& model;
  Real dt;
  Real dt_scale;      // dt^{1/alpha}
  Real sigma;         // alpha / 2
  Real cos_fac;       // cos(pi sigma / 2)^{1/sigma}
  Real cap;           // per-evaluation cap on kappa
  bool origin_rule;   // d = 1 < alpha
  bool zero_kappa;

  explicit Walker(const ModelSpec& m, Real dt_in)
      : model(m),
        dt(dt_in),
        dt_scale(std::pow(dt_in, 1.0 / m.alpha)),
        sigma(0.5 * m.alpha),
        cos_fac(std::pow(std::cos(0.5 * std::numbers::pi * 0.5 * m.alpha), 2.0 / m.alpha)),
        cap(10.0 / dt_in),
        origin_rule(m.d == 1 && m.alpha > 1.0),
        zero_kappa(m.kappa.is_zero()) {
    if (!(dt_in > 0.0)) throw std::domain_error("simulate: dt > 0 required");
  }

  Real scale_for(Real step_dt) const {
    return step_dt == dt ? dt_scale : std::pow(step_dt, 1.0 / model.alpha);
  }

  Real subordinator(Philox& rng) const {
    const Real half_pi = 0.5 * std::numbers::pi;
    const Real v = half_pi * (2.0 * rng.next_uniform() - 1.0);
    const Real w = rng.next_exponential();
    const Real shifted = sigma * (v + half_pi);
    return cos_fac * std::sin(shifted) / std::pow(std::cos(v), 1.0 / sigma) *
           std::pow(std::cos(v - shifted) / w, (1.0 - sigma) / sigma);
  }

  void increment(Philox& rng, Real step_scale, Real* out) const {
    const Real s = std::sqrt(2.0 * subordinator(rng));
    for (int i = 0; i < model.d; ++i) out[i] = step_scale * s * rng.next_normal();
  }

  static Real norm(const Real* p, int d) {
    Real s = 0.0;
    for (int i = 0; i < d; ++i) s += p[i] * p[i];
    return std::sqrt(s);
  }

  // Advances one step.  Returns false when the origin rule killed the path.
  // step_scale must equal step_dt^{1/alpha}.
  bool step(Philox& rng, Real* pos, Real& kill, Real step_dt, Real step_scale) const {
    const int d = model.d;
    Real inc[kMaxDim];
    increment(rng, step_scale, inc);
    Real next[kMaxDim];
    for (int i = 0; i < d; ++i) next[i] = pos[i] + inc[i];
    if (origin_rule && pos[0] * next[0] < 0.0) {
      if (std::abs(pos[0]) < step_scale && std::abs(next[0]) < step_scale) return false;
    }
    if (!zero_kappa) {
      Real mid[kMaxDim];
      for (int i = 0; i < d; ++i) mid[i] = 0.5 * (pos[i] + next[i]);
      const Real r = norm(mid, d);
      const Real k = r > 0.0 ? std::min(model.kappa.radial(r), cap) : cap;
      kill += step_dt * k;
    }
    for (int i = 0; i < d; ++i) pos[i] = next[i];
    return true;
  }
};

struct BlockSums {
  Real sum = 0.0;
  Real sumsq = 0.0;
  Real extra = 0.0;   // mode-dependent (unresolved counts, rhs sums, ...)
  Real extra2 = 0.0;
  Real count = 0.0;
};

template <typename Fn>
std::vector<BlockSums> run_blocks(std::size_t n, int threads, Fn&& per_replicate) {
  const std::size_t nblocks = (n + kBlock - 1) / kBlock;
  std::vector<BlockSums> blocks(nblocks);
  parallel_for(nblocks, threads, [&](std::size_t b) {
    const std::size_t lo = b * kBlock, hi = std::min(n, lo + kBlock);
    BlockSums s;
    for (std::size_t i = lo; i < hi; ++i) per_replicate(i, s);
    blocks[b] = s;
  });
  return blocks;
}

MCEstimate reduce_mean(const std::vector<BlockSums>& blocks, std::size_t n, std::uint64_t seed) {
  Real sum = 0.0, sumsq = 0.0;
  for (const auto& b : blocks) {
    sum += b.sum;
    sumsq += b.sumsq;
  }
  MCEstimate e;
  e.n = n;
  e.seed_root = seed;
  e.mean = sum / static_cast<Real>(n);
  const Real var = n > 1 ? std::max(0.0, (sumsq - n * e.mean * e.mean) / static_cast<Real>(n - 1))
                         : 0.0;
  e.stderr_ = std::sqrt(var / static_cast<Real>(n));
  return e;
}

}  // namespace

Point sample_stable_increment(const ModelSpec& model, Real dt, Philox& rng) {
  if (!(dt > 0.0)) throw std::domain_error("sample_stable_increment: dt > 0 required");
  Walker w(model, dt);
  Real buf[kMaxDim];
  w.increment(rng, w.dt_scale, buf);
  Point p(model.d);
  for (int i = 0; i < model.d; ++i) p(i) = buf[i];
  return p;
}

PathSample simulate_path(const ModelSpec& model, const Point& x0, Real t, Real dt, Philox& rng) {
  if (x0.norm() == 0.0) throw std::domain_error("simulate_path: x0 != 0 required");
  if (!(dt > 0.0 && dt <= t)) throw std::domain_error("simulate_path: 0 < dt <= t required");
  Walker w(model, dt);
  PathSample out;
  Real pos[kMaxDim];
  for (int i = 0; i < model.d; ++i) pos[i] = x0(i);
  Real kill = 0.0;
  Real now = 0.0;
  out.times.push_back(0.0);
  out.positions.push_back(x0);
  while (now < t - 1e-15 * t) {
    const Real step_dt = std::min(dt, t - now);
    if (!w.step(rng, pos, kill, step_dt, w.scale_for(step_dt))) {
      out.status = PathSample::Status::KilledByOriginRule;
      out.kill_integral = kill;
      out.weight = 0.0;
      return out;
    }
    now += step_dt;
    out.times.push_back(now);
    Point p(model.d);
    for (int i = 0; i < model.d; ++i) p(i) = pos[i];
    out.positions.push_back(std::move(p));
  }
  out.kill_integral = kill;
  out.weight = std::exp(-kill);
  return out;
}

MCEstimate mc_mean(std::size_t n, std::uint64_t seed, int threads,
                   const std::function<Real(std::size_t, Philox&)>& fn) {
  if (n == 0) throw std::invalid_argument("mc_mean: n >= 1 required");
  auto blocks = run_blocks(n, threads, [&](std::size_t i, BlockSums& s) {
    Philox rng(seed, i);
    const Real v = fn(i, rng);
    s.sum += v;
    s.sumsq += v * v;
  });
  return reduce_mean(blocks, n, seed);
}

namespace {

// Runs the walk to time t and returns (weight, endpoint in buf); weight 0 if
// the origin rule fired.
inline Real walk_to(const Walker& w, const Point& x0, Real t, Philox& rng, Real* pos) {
  const int d = w.model.d;
  for (int i = 0; i < d; ++i) pos[i] = x0(i);
  Real kill = 0.0;
  const std::size_t nsteps = static_cast<std::size_t>(std::ceil(t / w.dt - 1e-12));
  Real now = 0.0;
  for (std::size_t s = 0; s < nsteps; ++s) {
    const Real step_dt = std::min(w.dt, t - now);
    if (!w.step(rng, pos, kill, step_dt, w.scale_for(step_dt))) return 0.0;
    now += step_dt;
  }
  return std::exp(-kill);
}

}  // namespace

MCEstimate estimate_survival(const ModelSpec& model, const Point& x, Real t, std::size_t n,
                             Real dt, std::uint64_t seed, int threads) {
  if (n == 0) throw std::invalid_argument("estimate_survival: n >= 1 required");
  Walker w(model, dt);
  auto blocks = run_blocks(n, threads, [&](std::size_t i, BlockSums& s) {
    Philox rng(seed, i);
    Real pos[kMaxDim];
    const Real v = walk_to(w, x, t, rng, pos);
    s.sum += v;
    s.sumsq += v * v;
  });
  return reduce_mean(blocks, n, seed);
}

MCEstimate estimate_semigroup(const ModelSpec& model, const Point& x, Real t,
                              const std::function<Real(const Point&)>& f, std::size_t n, Real dt,
                              std::uint64_t seed, int threads) {
  Walker w(model, dt);
  auto blocks = run_blocks(n, threads, [&](std::size_t i, BlockSums& s) {
    Philox rng(seed, i);
    Real pos[kMaxDim];
    const Real wt = walk_to(w, x, t, rng, pos);
    Real v = 0.0;
    if (wt > 0.0) {
      Point p(model.d);
      for (int k = 0; k < model.d; ++k) p(k) = pos[k];
      v = wt * f(p);
    }
    s.sum += v;
    s.sumsq += v * v;
  });
  return reduce_mean(blocks, n, seed);
}

namespace {

inline Real epanechnikov(const Real* end, const Point& y, Real h, int d) {
  Real k = 1.0;
  for (int i = 0; i < d; ++i) {
    const Real u = (end[i] - y(i)) / h;
    const Real v = 1.0 - u * u;
    if (v <= 0.0) return 0.0;
    k *= 0.75 * v / h;
  }
  return k;
}

}  // namespace

KernelEstimate estimate_kernel(const ModelSpec& model, Real t, const Point& x, const Point& y,
                               Real h, std::size_t n, Real dt, std::uint64_t seed, int threads,
                               Real curvature_bound) {
  if (n == 0) throw std::invalid_argument("estimate_kernel: n >= 1 required");
  Walker w(model, dt);
  const int d = model.d;

  Real bw = h;
  std::vector<Real> ends;       // populated only in the auto-bandwidth path
  std::vector<Real> weights;
  if (bw <= 0.0) {
    ends.assign(n * d, 0.0);
    weights.assign(n, 0.0);
    const std::size_t nblocks = (n + kBlock - 1) / kBlock;
    parallel_for(nblocks, threads, [&](std::size_t b) {
      const std::size_t lo = b * kBlock, hi = std::min(n, lo + kBlock);
      for (std::size_t i = lo; i < hi; ++i) {
        Philox rng(seed, i);
        Real pos[kMaxDim];
        weights[i] = walk_to(w, x, t, rng, pos);
        for (int k = 0; k < d; ++k) ends[i * d + k] = pos[k];
      }
    });
    // robust per-coordinate scale: median absolute deviation
    Real sigma_hat = 0.0;
    std::vector<Real> coord(n);
    for (int k = 0; k < d; ++k) {
      for (std::size_t i = 0; i < n; ++i) coord[i] = ends[i * d + k];
      std::nth_element(coord.begin(), coord.begin() + n / 2, coord.end());
      const Real med = coord[n / 2];
      for (std::size_t i = 0; i < n; ++i) coord[i] = std::abs(ends[i * d + k] - med);
      std::nth_element(coord.begin(), coord.begin() + n / 2, coord.end());
      sigma_hat = std::max(sigma_hat, 1.4826 * coord[n / 2]);
    }
    if (sigma_hat <= 0.0) sigma_hat = 1.0;
    bw = 2.34 * sigma_hat * std::pow(static_cast<Real>(n), -1.0 / (d + 4.0));
  }

  std::vector<BlockSums> blocks;
  if (!ends.empty()) {
    blocks = run_blocks(n, threads, [&](std::size_t i, BlockSums& s) {
      const Real v = weights[i] > 0.0 ? weights[i] * epanechnikov(&ends[i * d], y, bw, d) : 0.0;
      s.sum += v;
      s.sumsq += v * v;
    });
  } else {
    blocks = run_blocks(n, threads, [&](std::size_t i, BlockSums& s) {
      Philox rng(seed, i);
      Real pos[kMaxDim];
      const Real wt = walk_to(w, x, t, rng, pos);
      const Real v = wt > 0.0 ? wt * epanechnikov(pos, y, bw, d) : 0.0;
      s.sum += v;
      s.sumsq += v * v;
    });
  }

  KernelEstimate ke;
  ke.est = reduce_mean(blocks, n, seed);
  ke.bandwidth = bw;
  Real curv = curvature_bound;
  if (curv <= 0.0 && d == 1) {
    curv = gamma_fn(3.0 / model.alpha) / (model.alpha * std::numbers::pi) *
           std::pow(t, -3.0 / model.alpha);
  }
  ke.bias_budget = curv > 0.0 ? 0.5 * bw * bw * (1.0 / 5.0) * curv : 0.0;
  return ke;
}

ExitResult estimate_exit(const ModelSpec& model, const Point& x0, const Point& center, Real r,
                         Real t_max, std::size_t n, Real dt, std::uint64_t seed, ExitMode mode,
                         Real threshold, int threads) {
  if ((x0 - center).norm() >= r) throw std::domain_error("estimate_exit: x0 must start inside");
  Walker w(model, dt);
  const int d = model.d;
  const int kHistBins = 64;
  const Real hist_lo = -4.0 * r, hist_hi = 4.0 * r;

  std::vector<std::vector<Real>> hist_blocks;
  const std::size_t nblocks = (n + kBlock - 1) / kBlock;
  if (mode == ExitMode::ExitPositionHistogram) hist_blocks.assign(nblocks, {});

  auto blocks = run_blocks(n, threads, [&](std::size_t i, BlockSums& s) {
    Philox rng(seed, i);
    Real pos[kMaxDim];
    for (int k = 0; k < d; ++k) pos[k] = x0(k);
    Real kill = 0.0;
    Real now = 0.0;
    Real time_weighted = 0.0;  // int w(s) ds while inside
    bool exited = false, origin_killed = false;
    Real exit_weight = 0.0, exit_time = 0.0, exit_coord = 0.0;
    while (now < t_max - 1e-15 * t_max) {
      const Real step_dt = std::min(w.dt, t_max - now);
      time_weighted += step_dt * std::exp(-kill);
      if (!w.step(rng, pos, kill, step_dt, w.scale_for(step_dt))) {
        origin_killed = true;
        break;
      }
      now += step_dt;
      Real dist = 0.0;
      for (int k = 0; k < d; ++k) {
        const Real dd = pos[k] - center(k);
        dist += dd * dd;
      }
      if (std::sqrt(dist) > r) {
        exited = true;
        exit_weight = std::exp(-kill);
        exit_time = now;
        exit_coord = d == 1 ? pos[0] : std::sqrt(dist);
        break;
      }
      if (mode == ExitMode::SurvivesTo && now >= threshold) break;
    }
    Real v = 0.0;
    switch (mode) {
      case ExitMode::ExitProbBefore:
        v = (exited && exit_time <= threshold) ? exit_weight : 0.0;
        break;
      case ExitMode::MeanExitTime:
        v = time_weighted;
        break;
      case ExitMode::SurvivesTo:
        v = (!exited && !origin_killed && now >= threshold) ? std::exp(-kill) : 0.0;
        break;
      case ExitMode::ExitPositionHistogram:
        if (exited) {
          auto& hist = hist_blocks[i / kBlock];
          if (hist.empty()) hist.assign(kHistBins, 0.0);
          const int bin = static_cast<int>((exit_coord - hist_lo) / (hist_hi - hist_lo) *
                                           kHistBins);
          if (bin >= 0 && bin < kHistBins) hist[bin] += exit_weight;
        }
        v = exited ? exit_weight : 0.0;
        break;
    }
    s.sum += v;
    s.sumsq += v * v;
    if (!exited && !origin_killed) s.extra += 1.0;  // unresolved at t_max
  });

  ExitResult res;
  res.est = reduce_mean(blocks, n, seed);
  Real unresolved = 0.0;
  for (const auto& b : blocks) unresolved += b.extra;
  res.unresolved_fraction = unresolved / static_cast<Real>(n);
  res.flagged = (mode == ExitMode::MeanExitTime || mode == ExitMode::ExitPositionHistogram) &&
                res.unresolved_fraction >= 0.5;
  if (mode == ExitMode::ExitPositionHistogram) {
    res.hist_edges.resize(kHistBins + 1);
    for (int i = 0; i <= kHistBins; ++i)
      res.hist_edges[i] = hist_lo + (hist_hi - hist_lo) * i / kHistBins;
    res.hist_mass.assign(kHistBins, 0.0);
    for (const auto& hb : hist_blocks)
      if (!hb.empty())
        for (int i = 0; i < kHistBins; ++i) res.hist_mass[i] += hb[i];
    for (auto& m : res.hist_mass) m /= static_cast<Real>(n);
  }
  return res;
}

LevyCheckReport levy_system_check(const ModelSpec& model, const Point& x, Real t, Real a1,
                                  Real a2, std::size_t n, Real dt, std::uint64_t seed,
                                  int threads) {
  if (model.d != 1) throw std::domain_error("levy_system_check: implemented for d = 1");
  if (!(a1 < a2)) throw std::domain_error("levy_system_check: a1 < a2 required");
  const Real margin = 0.25 * (a2 - a1);
  const Real stop_lo = a1 - margin, stop_hi = a2 + margin;
  if (x(0) > stop_lo && x(0) < stop_hi)
    throw std::domain_error("levy_system_check: start inside the stopped neighborhood");
  const Real A = stable_constant(1, model.alpha);
  Walker w(model, dt);

  // closed-form 1-D jump-kernel integral over [a1, a2] seen from p outside
  auto kernel_mass = [&](Real p) {
    const Real al = model.alpha;
    auto prim = [&](Real u) { return -std::pow(std::abs(u), -al) / al; };  // int |u|^{-1-al}
    return A * std::abs(prim(a2 - p) - prim(a1 - p));
  };

  auto blocks = run_blocks(n, threads, [&](std::size_t i, BlockSums& s) {
    Philox rng(seed, i);
    Real pos[1] = {x(0)};
    Real kill = 0.0;
    Real lhs = 0.0, rhs = 0.0;
    Real now = 0.0;
    std::size_t events = 0;
    while (now < t - 1e-15 * t) {
      const Real step_dt = std::min(w.dt, t - now);
      rhs += step_dt * std::exp(-kill) * kernel_mass(pos[0]);
      if (!w.step(rng, pos, kill, step_dt, w.scale_for(step_dt))) break;
      now += step_dt;
      if (pos[0] > stop_lo && pos[0] < stop_hi) {
        if (pos[0] >= a1 && pos[0] <= a2) {
          lhs += std::exp(-kill);
          ++events;
        }
        break;  // stopping time reached
      }
    }
    s.sum += lhs;
    s.sumsq += lhs * lhs;
    s.extra += rhs;
    s.extra2 += rhs * rhs;
    s.count += static_cast<Real>(events);
  });

  LevyCheckReport rep;
  rep.lhs = reduce_mean(blocks, n, seed);
  Real rsum = 0.0, rsq = 0.0, ev = 0.0;
  for (const auto& b : blocks) {
    rsum += b.extra;
    rsq += b.extra2;
    ev += b.count;
  }
  rep.rhs.n = n;
  rep.rhs.seed_root = seed;
  rep.rhs.mean = rsum / static_cast<Real>(n);
  const Real var = std::max(0.0, (rsq - n * rep.rhs.mean * rep.rhs.mean) / static_cast<Real>(n - 1));
  rep.rhs.stderr_ = std::sqrt(var / static_cast<Real>(n));
  rep.jump_events = static_cast<std::size_t>(ev);
  rep.ratio = rep.rhs.mean > 0.0 ? rep.lhs.mean / rep.rhs.mean : 0.0;
  rep.combined_stderr = std::sqrt(rep.lhs.stderr_ * rep.lhs.stderr_ +
                                  rep.rhs.stderr_ * rep.rhs.stderr_);
  rep.flagged = rep.jump_events < 30;
  return rep;
}

}  // namespace fkstable
