#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fkstable/special.hpp"
#include "fkstable/types.hpp"

namespace fkstable {

// Regime tag of the pair (d, alpha).  d >= 2 is always transient since
// alpha < 2 <= d.
enum class Regime { Transient, Recurrent, Critical };

inline Regime regime_of(int d, Real alpha) {
  if (d > alpha) return Regime::Transient;
  if (d == 1 && alpha > 1.0) return Regime::Recurrent;
  return Regime::Critical;  // d = 1 = alpha
}

// Strictly increasing scaling function psi with psi(1) = 1 and
//   lambda^{-1} (R/r)^{beta1} <= psi(R)/psi(r) <= lambda (R/r)^{beta2},  0 < r <= R.
class ScalingFunction {
 public:
  enum class Kind { PowerLaw, Tabulated };

  static ScalingFunction power_law(Real beta);
  static ScalingFunction power_law(Real beta, Real beta1, Real beta2, Real lambda);
  // Tabulated monotone samples (r_i, psi_i); interpolated piecewise-linearly in
  // log-log coordinates and renormalized so psi(1) = 1 exactly.
  static ScalingFunction tabulated(std::vector<std::pair<Real, Real>> samples,
                                   Real beta1, Real beta2, Real lambda);

  Real operator()(Real r) const;   // psi(r), r > 0
  Real inverse(Real t) const;      // psi^{-1}(t), t > 0

  Kind kind() const { return kind_; }
  Real beta() const { return beta_; }
  Real beta1() const { return beta1_; }
  Real beta2() const { return beta2_; }
  Real lambda() const { return lambda_; }

 private:
  ScalingFunction() = default;

  Kind kind_ = Kind::PowerLaw;
  Real beta_ = 2.0;
  Real beta1_ = 2.0, beta2_ = 2.0, lambda_ = 1.0;
  std::vector<Real> log_r_, log_v_;  // tabulated knots, log-log
};

struct ScalingClassReport {
  bool pass = false;
  Real worst_factor = 1.0;  // max violation factor over the sampled pairs
  std::size_t violations = 0;
};

// Checks the two-sided power sandwich on sampled pairs (r, R), r <= R.
ScalingClassReport check_scaling_class(const ScalingFunction& psi,
                                       const std::vector<std::pair<Real, Real>>& pairs);

// Killing potential kappa >= 0 on R^d \ {0}.
class KillingPotential {
 public:
  enum class Kind { PowerLaw, Custom };
  enum class ClassTag { K0, K };

  static KillingPotential power_law(Real b, Real beta);
  static KillingPotential custom(std::function<Real(Real)> radial_fn,
                                 ClassTag tag = ClassTag::K0);
  static KillingPotential zero();  // calibration only; not in any class

  Real operator()(const Point& x) const;
  Real radial(Real r) const;  // kappa on |x| = r

  Kind kind() const { return kind_; }
  ClassTag class_tag() const { return tag_; }
  Real b() const { return b_; }
  Real beta() const { return beta_; }
  bool is_zero() const { return zero_; }

 private:
  KillingPotential() = default;

  Kind kind_ = Kind::PowerLaw;
  ClassTag tag_ = ClassTag::K;
  Real b_ = 1.0, beta_ = 2.0;
  bool zero_ = false;
  std::function<Real(Real)> fn_;
};

struct ModelSpec {
  int d = 1;
  Real alpha = 1.0;
  ScalingFunction psi = ScalingFunction::power_law(2.0);
  KillingPotential kappa = KillingPotential::power_law(1.0, 2.0);

  Regime regime() const { return regime_of(d, alpha); }
  void validate() const;  // alpha in (0,2), d >= 1, beta1 > alpha
};

struct MembershipReport {
  bool k0 = false;
  bool k = false;
  Real worst_lower = 1.0;  // worst factor by which the lower sandwich fails
  Real worst_upper = 1.0;  // worst factor by which an upper bound fails
};

// Verifies the class sandwiches for kappa on a radial grid spanning (0, r_max].
MembershipReport check_class_membership(const ModelSpec& model,
                                        const std::vector<Real>& radial_grid);

// Explicit constants attached to a model.  lambda1/lambda2 are the free
// exponential rates of the small-time envelopes; they default to 1 and are
// fitted empirically downstream.
struct Constants {
  Real a_stable = 0.0;  // A(d,-alpha)
  Real a_sphere = 0.0;  // A_{d-1}
  Real c0 = 0.0;        // 2^{2 beta2 + 3} lambda / 3
  Real eps0 = 0.0;
  Real delta0 = 0.0;
  Real lambda1 = 1.0;
  Real lambda2 = 1.0;
};

Constants constants_for(const ModelSpec& model);

// FNV-1a hash of the canonical textual form; embedded in every output file.
std::uint64_t model_hash(const ModelSpec& model);
std::string model_to_string(const ModelSpec& model);

// Strict JSON loaders; unknown keys are fatal.
ModelSpec model_from_json_text(const std::string& text);
ModelSpec model_from_json_file(const std::string& path);

}  // namespace fkstable
