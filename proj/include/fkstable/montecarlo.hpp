#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fkstable/model.hpp"
#include "fkstable/rng.hpp"
#include "fkstable/types.hpp"

namespace fkstable {

// One simulated killed trajectory on a uniform time grid.
struct PathSample {
  enum class Status { Alive, KilledByOriginRule };
  std::vector<Real> times;
  std::vector<Point> positions;
  Real kill_integral = 0.0;       // int_0^t kappa(Y_s) ds, midpoint rule, capped
  Real weight = 1.0;              // exp(-kill_integral); 0 when killed by the origin rule
  Status status = Status::Alive;
};

struct MCEstimate {
  Real mean = 0.0;
  Real stderr_ = 0.0;
  std::size_t n = 0;
  std::uint64_t seed_root = 0;
};

// dt^{1/alpha} Z with Z a standard isotropic alpha-stable draw
// (subordinated Gaussian).
Point sample_stable_increment(const ModelSpec& model, Real dt, Philox& rng);

// Euler walk with midpoint killing quadrature capped at 10/dt per evaluation.
// For d = 1 < alpha a step whose linear interpolation crosses the origin with
// both endpoints inside dt^{1/alpha} kills the path outright (conservative
// surrogate for the almost-sure origin kill).
PathSample simulate_path(const ModelSpec& model, const Point& x0, Real t, Real dt, Philox& rng);

// mean of exp(-kill integral) over n independent replicates: P_x(zeta > t)
MCEstimate estimate_survival(const ModelSpec& model, const Point& x, Real t, std::size_t n,
                             Real dt, std::uint64_t seed, int threads = 1);

// mean of weight * f(endpoint)
MCEstimate estimate_semigroup(const ModelSpec& model, const Point& x, Real t,
                              const std::function<Real(const Point&)>& f, std::size_t n, Real dt,
                              std::uint64_t seed, int threads = 1);

struct KernelEstimate {
  MCEstimate est;
  Real bandwidth = 0.0;
  Real bias_budget = 0.0;  // (1/2) h^2 mu2(K) * curvature bound
};

// Weighted Epanechnikov KDE of p^kappa(t, x, .) at y.  h <= 0 selects the
// MISE-rate default 2.34 * sigma_hat * n^{-1/(d+4)} from a robust scale of
// the endpoints.  curvature_bound <= 0 falls back to the free-kernel peak
// curvature Gamma(3/alpha)/(alpha pi) t^{-3/alpha} (d = 1 only).
KernelEstimate estimate_kernel(const ModelSpec& model, Real t, const Point& x, const Point& y,
                               Real h, std::size_t n, Real dt, std::uint64_t seed,
                               int threads = 1, Real curvature_bound = -1.0);

enum class ExitMode { ExitProbBefore, MeanExitTime, SurvivesTo, ExitPositionHistogram };

struct ExitResult {
  MCEstimate est;
  Real unresolved_fraction = 0.0;  // still inside and alive at t_max
  bool flagged = false;            // >= 50% unresolved
  std::vector<Real> hist_edges;
  std::vector<Real> hist_mass;
};

// Exit statistics of the killed process from ball B(center, r):
//   ExitProbBefore:  E[ 1{tau <= threshold} w(tau) ]
//   MeanExitTime:    E[ int_0^tau w(s) ds ]  (tau capped at t_max, flagged)
//   SurvivesTo:      E[ 1{stays inside through threshold} w(threshold) ]
//   ExitPositionHistogram: weighted histogram of the exit position
ExitResult estimate_exit(const ModelSpec& model, const Point& x0, const Point& center, Real r,
                         Real t_max, std::size_t n, Real dt, std::uint64_t seed, ExitMode mode,
                         Real threshold = 0.0, int threads = 1);

struct LevyCheckReport {
  MCEstimate lhs;  // expected number of jumps landing in A before the stop
  MCEstimate rhs;  // expected time-integral of the jump kernel over A
  Real ratio = 0.0;
  Real combined_stderr = 0.0;
  std::size_t jump_events = 0;
  bool flagged = false;  // fewer than 30 landings observed
};

// Compares the two sides of the Levy-system identity for the interval
// A = [a1, a2] (d = 1), with the path stopped on first entry into a margin
// neighborhood of A or at time t.
LevyCheckReport levy_system_check(const ModelSpec& model, const Point& x, Real t, Real a1,
                                  Real a2, std::size_t n, Real dt, std::uint64_t seed,
                                  int threads = 1);

// Deterministic block-merged mean of per-replicate values: fn(replicate
// index, stream) -> value.  The reduction order is fixed by block index, so
// the result is independent of the thread schedule.
MCEstimate mc_mean(std::size_t n, std::uint64_t seed, int threads,
                   const std::function<Real(std::size_t, Philox&)>& fn);

}  // namespace fkstable
