#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fkstable/envelopes.hpp"
#include "fkstable/model.hpp"
#include "fkstable/montecarlo.hpp"
#include "fkstable/types.hpp"

namespace fkstable {

// One evaluated sweep point.  ratio_lo = lower_env / (estimate + band) and
// ratio_hi = (estimate - band) / upper_env, so the fitted constants are the
// literal maxima of these columns.
struct SweepPoint {
  Real t = 0.0, x = 0.0, y = 0.0;
  Real estimate = 0.0, stderr_ = 0.0;
  Real lower_env = 0.0, upper_env = 0.0;
  Real ratio_lo = 0.0, ratio_hi = 0.0;
  bool excluded = false;  // degenerate envelope at this point
};

struct FitReport {
  std::string check_id;
  std::uint64_t model_hash_ = 0;
  Real fitted_c_lower = 0.0;  // max of ratio_lo: smallest C with lower/C <= estimate
  Real fitted_c_upper = 0.0;  // max of ratio_hi: smallest C with estimate <= C upper
  Real ceiling = 1e4;
  bool pass = false;
  std::size_t excluded = 0;
  std::vector<SweepPoint> points;

  Real fitted_c() const { return std::max(fitted_c_lower, fitted_c_upper); }
};

// Fills the ratio columns (band = 3 stderr per point), takes maxima, applies
// the ceiling.  Degenerate (zero/non-finite envelope) points are excluded
// and counted.
FitReport sandwich_fit(const std::string& check_id, std::uint64_t model_hash,
                       std::vector<SweepPoint> points, Real ceiling);

// q~(t-s,x,z) q~(s,z,y) / ( q~(t,x,y) [ q~(t-s,x,z) + q~(s,y,z) ] )
Real three_p_ratio(int d, Real alpha, Real t, Real s, const Point& x, const Point& y,
                   const Point& z);

struct ThreePReport {
  Real fitted_c = 0.0;       // max ratio over the full sample
  Real fitted_c_half = 0.0;  // max over the first half (stability diagnostic)
  Real fitted_c_quarter = 0.0;
  Real analytic_point = 0.0;  // ratio at s = t/2, x = y = z (equals 2^{d/alpha - 1})
  std::size_t n = 0;
};

// Random sweep with heavy-tailed sample points, deterministic in the seed.
ThreePReport three_p_check(int d, Real alpha, std::size_t n_samples, std::uint64_t seed);

// Normalized one-step perturbation integral of the exterior domain B(0,R)^c:
//   (1 / F(t,x) F(t,y)) *
//   int_0^t int_{|z|>R} F(s,x) F(s,z) F(t-s,y) F(t-s,z)
//                       (q~(s,x,z) + q~(t-s,y,z)) Lambda^2 |z|^{-beta1} dz ds
// with F the regime boundary factor.  Decays like R^{alpha - beta1}.
Real one_step_integral(const ModelSpec& model, Real R, Real t, Real x, Real y);

// Same integral restricted to s in [s_lo, s_hi] with the z-side boundary
// factors replaced by 1 (consistency hook for the s <= R^alpha range).
Real one_step_integral_window(const ModelSpec& model, Real R, Real t, Real x, Real y, Real s_lo,
                              Real s_hi, bool unit_factors);

struct SurvivalSuiteConfig {
  std::size_t n = 20000;
  Real dt = 5e-4;
  std::uint64_t seed = 20240801;
  int threads = 1;
  Real ceiling = 1e3;
  Real lower_floor = 1e-3;
  Real ball_radius = 0.25;  // feasible stand-in for the eps0-ball statements
};

// The survival / exit bound suite: Lemma 3.7, Lemma 3.6, Prop 3.5,
// Lemma 2.7, Cor 2.8, Prop 2.1, Lemma 3.8 shapes with fitted constants.
std::vector<FitReport> survival_bound_suite(const ModelSpec& model,
                                            const SurvivalSuiteConfig& config);

// CSV emission: one summary row per report followed by its point rows.
void emit_report(const std::vector<FitReport>& reports, const std::string& path,
                 std::uint64_t seed = 0, const std::string& version = "fkstable-1");
std::vector<FitReport> parse_report(const std::string& path);

}  // namespace fkstable
