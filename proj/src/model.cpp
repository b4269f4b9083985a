#include "fkstable/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fkstable {

ScalingFunction ScalingFunction::power_law(Real beta) {
  return power_law(beta, beta, beta, 1.0);
}

ScalingFunction ScalingFunction::power_law(Real beta, Real beta1, Real beta2, Real lambda) {
  if (beta <= 0.0) throw std::domain_error("ScalingFunction: beta > 0 required");
  if (!(beta1 <= beta && beta <= beta2) || lambda < 1.0)
    throw std::domain_error("ScalingFunction: need beta1 <= beta <= beta2, lambda >= 1");
  ScalingFunction f;
  f.kind_ = Kind::PowerLaw;
  f.beta_ = beta;
  f.beta1_ = beta1;
  f.beta2_ = beta2;
  f.lambda_ = lambda;
  return f;
}

ScalingFunction ScalingFunction::tabulated(std::vector<std::pair<Real, Real>> samples,
                                           Real beta1, Real beta2, Real lambda) {
  if (samples.size() < 2) throw std::domain_error("ScalingFunction: need >= 2 samples");
  if (beta2 < beta1 || lambda < 1.0)
    throw std::domain_error("ScalingFunction: need beta2 >= beta1, lambda >= 1");
  std::sort(samples.begin(), samples.end());
  ScalingFunction f;
  f.kind_ = Kind::Tabulated;
  f.beta1_ = beta1;
  f.beta2_ = beta2;
  f.lambda_ = lambda;
  f.beta_ = 0.5 * (beta1 + beta2);
  for (auto& [r, v] : samples) {
    if (r <= 0.0 || v <= 0.0) throw std::domain_error("ScalingFunction: positive samples required");
    if (!f.log_r_.empty() && std::log(r) <= f.log_r_.back())
      throw std::domain_error("ScalingFunction: duplicate radii");
    if (!f.log_v_.empty() && std::log(v) <= f.log_v_.back())
      throw std::domain_error("ScalingFunction: samples must be strictly increasing");
    f.log_r_.push_back(std::log(r));
    f.log_v_.push_back(std::log(v));
  }
  // normalize so that psi(1) = 1 exactly
  ScalingFunction unnorm = f;
  const Real at_one = std::log(unnorm(1.0));
  for (auto& lv : f.log_v_) lv -= at_one;
  return f;
}

Real ScalingFunction::operator()(Real r) const {
  if (!(r > 0.0)) throw std::domain_error("psi: r > 0 required");
  if (kind_ == Kind::PowerLaw) return std::pow(r, beta_);
  const Real lr = std::log(r);
  const auto& xs = log_r_;
  const auto& ys = log_v_;
  std::size_t hi = std::upper_bound(xs.begin(), xs.end(), lr) - xs.begin();
  // extend past the table with the edge slopes; keeps monotonicity
  if (hi == 0) hi = 1;
  if (hi == xs.size()) hi = xs.size() - 1;
  const std::size_t lo = hi - 1;
  const Real w = (lr - xs[lo]) / (xs[hi] - xs[lo]);
  return std::exp(ys[lo] + w * (ys[hi] - ys[lo]));
}

Real ScalingFunction::inverse(Real t) const {
  if (!(t > 0.0)) throw std::domain_error("psi_inverse: t > 0 required");
  if (kind_ == Kind::PowerLaw) return std::pow(t, 1.0 / beta_);
  const Real lt = std::log(t);
  const auto& xs = log_r_;
  const auto& ys = log_v_;
  std::size_t hi = std::upper_bound(ys.begin(), ys.end(), lt) - ys.begin();
  if (hi == 0) hi = 1;
  if (hi == ys.size()) hi = ys.size() - 1;
  const std::size_t lo = hi - 1;
  const Real w = (lt - ys[lo]) / (ys[hi] - ys[lo]);
  return std::exp(xs[lo] + w * (xs[hi] - xs[lo]));
}

ScalingClassReport check_scaling_class(const ScalingFunction& psi,
                                       const std::vector<std::pair<Real, Real>>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("check_scaling_class: empty sample set");
  ScalingClassReport rep;
  rep.pass = true;
  for (const auto& [r, R] : pairs) {
    if (!(0.0 < r && r <= R)) throw std::invalid_argument("check_scaling_class: need 0 < r <= R");
    const Real ratio = psi(R) / psi(r);
    const Real lo = std::pow(R / r, psi.beta1()) / psi.lambda();
    const Real hi = std::pow(R / r, psi.beta2()) * psi.lambda();
    Real factor = 1.0;
    if (ratio < lo) factor = lo / ratio;
    if (ratio > hi) factor = std::max(factor, ratio / hi);
    if (factor > 1.0 + 1e-12) {
      rep.pass = false;
      ++rep.violations;
    }
    rep.worst_factor = std::max(rep.worst_factor, factor);
  }
  return rep;
}

KillingPotential KillingPotential::power_law(Real b, Real beta) {
  if (b <= 0.0 || beta <= 0.0) throw std::domain_error("KillingPotential: b, beta > 0");
  KillingPotential k;
  k.kind_ = Kind::PowerLaw;
  k.tag_ = ClassTag::K;
  k.b_ = b;
  k.beta_ = beta;
  return k;
}

KillingPotential KillingPotential::custom(std::function<Real(Real)> radial_fn, ClassTag tag) {
  KillingPotential k;
  k.kind_ = Kind::Custom;
  k.tag_ = tag;
  k.fn_ = std::move(radial_fn);
  return k;
}

KillingPotential KillingPotential::zero() {
  KillingPotential k;
  k.kind_ = Kind::Custom;
  k.tag_ = ClassTag::K0;
  k.zero_ = true;
  k.fn_ = [](Real) { return 0.0; };
  return k;
}

Real KillingPotential::radial(Real r) const {
  if (!(r > 0.0)) throw std::domain_error("kappa: singular at the origin");
  if (kind_ == Kind::PowerLaw) return b_ * std::pow(r, -beta_);
  const Real v = fn_(r);
  if (v < 0.0) throw std::domain_error("kappa: negative value");
  return v;
}

Real KillingPotential::operator()(const Point& x) const { return radial(x.norm()); }

void ModelSpec::validate() const {
  if (d < 1) throw std::domain_error("ModelSpec: d >= 1 required");
  if (!(alpha > 0.0 && alpha < 2.0)) throw std::domain_error("ModelSpec: alpha in (0,2)");
  if (!(psi.beta1() > alpha))
    throw std::domain_error("ModelSpec: supercriticality beta1 > alpha required");
}

MembershipReport check_class_membership(const ModelSpec& model,
                                        const std::vector<Real>& radial_grid) {
  MembershipReport rep;
  rep.k0 = true;
  rep.k = true;
  const Real lam = model.psi.lambda() * std::max(model.kappa.b(), 1.0 / model.kappa.b());
  // For a declared power-law kappa the class constant is b v b^{-1}; custom
  // potentials are tested against the psi-class lambda alone.
  const Real L = model.kappa.kind() == KillingPotential::Kind::PowerLaw ? lam : model.psi.lambda();
  for (Real r : radial_grid) {
    if (!(r > 0.0)) continue;
    const Real kap = model.kappa.radial(r);
    if (r <= 1.0) {
      const Real lo = 1.0 / (L * model.psi(r));
      const Real hi = L / model.psi(r);
      if (kap < lo) {
        rep.k0 = false;
        rep.k = false;
        rep.worst_lower = std::max(rep.worst_lower, kap > 0.0 ? lo / kap
                                                              : std::numeric_limits<Real>::infinity());
      }
      if (kap > hi) {
        rep.k0 = false;
        rep.k = false;
        rep.worst_upper = std::max(rep.worst_upper, kap / hi);
      }
    } else {
      if (kap > L) {
        rep.k0 = false;
        rep.worst_upper = std::max(rep.worst_upper, kap / L);
      }
      const Real hi = L / model.psi(r);
      if (kap > hi) {
        rep.k = false;
        rep.worst_upper = std::max(rep.worst_upper, kap / hi);
      }
    }
  }
  if (!rep.k0) rep.k = false;  // K is a subclass of K0
  return rep;
}

Constants constants_for(const ModelSpec& model) {
  model.validate();
  Constants c;
  const int d = model.d;
  const Real alpha = model.alpha;
  const Real b1 = model.psi.beta1();
  const Real b2 = model.psi.beta2();
  const Real lam = model.psi.lambda();

  c.a_stable = stable_constant(d, alpha);
  c.a_sphere = sphere_area(d);
  c.c0 = std::pow(2.0, 2.0 * b2 + 3.0) * lam / 3.0;

  const Real A = c.a_stable, Ad = c.a_sphere, C0 = c.c0;
  const Real t1 = (2.0 - alpha) /
                  (std::pow(2.0, alpha - b1 + 10.0) * (1.0 + 2.0 * d) * std::pow(3.0, b1) * A *
                   C0 * C0 * lam * lam * Ad);
  const Real t2 = alpha / (std::pow(2.0, alpha + 2.0 * b1 + 4.0) * A * C0 * lam * lam * Ad);
  const Real t3 =
      (b1 - alpha) / (std::pow(2.0, d - alpha + 2.0 * b1 + 4.0) * A * C0 * lam * lam * Ad);
  const Real t4 = alpha / (std::pow(2.0, d - alpha + 2.0 * b1 + 4.0) * A * C0 * lam * lam * Ad);
  const Real bracket = std::min(std::min(t1, t2), std::min(t3, t4));
  c.eps0 = std::min(0.125, std::pow(bracket, 1.0 / (b1 - alpha)));
  c.delta0 = alpha * std::pow(c.eps0, alpha) /
             (std::pow(2.0, d - alpha + 4.0) * A * C0 * lam * Ad);

  const Real consistency = lam * std::pow(4.0 * c.eps0, b1) / c.delta0;
  if (consistency > 1.0 + 1e-12)
    throw std::logic_error("constants_for: eps0/delta0 consistency violated");
  return c;
}

std::string model_to_string(const ModelSpec& model) {
  std::ostringstream os;
  os.precision(17);
  os << "d=" << model.d << ";alpha=" << model.alpha;
  os << ";psi=" << (model.psi.kind() == ScalingFunction::Kind::PowerLaw ? "power" : "table");
  os << ";beta=" << model.psi.beta() << ";beta1=" << model.psi.beta1()
     << ";beta2=" << model.psi.beta2() << ";lambda=" << model.psi.lambda();
  os << ";kappa=" << (model.kappa.is_zero() ? "zero"
                      : model.kappa.kind() == KillingPotential::Kind::PowerLaw ? "power"
                                                                               : "custom");
  os << ";b=" << model.kappa.b() << ";kbeta=" << model.kappa.beta();
  return os.str();
}

std::uint64_t model_hash(const ModelSpec& model) {
  const std::string s = model_to_string(model);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed,
                         const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok) throw std::invalid_argument("unknown key '" + it.key() + "' in " + where);
  }
}

}  // namespace

ModelSpec model_from_json_text(const std::string& text) {
  const json j = json::parse(text);
  reject_unknown_keys(j, {"d", "alpha", "psi", "kappa"}, "model");
  ModelSpec m;
  m.d = j.at("d").get<int>();
  m.alpha = j.at("alpha").get<Real>();

  const json& jp = j.at("psi");
  reject_unknown_keys(jp, {"kind", "beta", "table", "beta1", "beta2", "lambda"}, "model.psi");
  const std::string pk = jp.at("kind").get<std::string>();
  if (pk == "power") {
    const Real beta = jp.at("beta").get<Real>();
    const Real b1 = jp.value("beta1", beta);
    const Real b2 = jp.value("beta2", beta);
    const Real lam = jp.value("lambda", 1.0);
    m.psi = ScalingFunction::power_law(beta, b1, b2, lam);
  } else if (pk == "table") {
    std::vector<std::pair<Real, Real>> samples;
    for (const auto& row : jp.at("table"))
      samples.emplace_back(row.at(0).get<Real>(), row.at(1).get<Real>());
    m.psi = ScalingFunction::tabulated(std::move(samples), jp.at("beta1").get<Real>(),
                                       jp.at("beta2").get<Real>(), jp.at("lambda").get<Real>());
  } else {
    throw std::invalid_argument("model.psi.kind must be 'power' or 'table'");
  }

  const json& jk = j.at("kappa");
  reject_unknown_keys(jk, {"kind", "b", "beta"}, "model.kappa");
  const std::string kk = jk.at("kind").get<std::string>();
  if (kk == "power") {
    m.kappa = KillingPotential::power_law(jk.at("b").get<Real>(), jk.at("beta").get<Real>());
  } else if (kk == "zero") {
    m.kappa = KillingPotential::zero();
  } else {
    throw std::invalid_argument("model.kappa.kind must be 'power' or 'zero'");
  }
  if (!m.kappa.is_zero()) m.validate();
  return m;
}

ModelSpec model_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json_text(ss.str());
}

}  // namespace fkstable
