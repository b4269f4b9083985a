#include "fkstable/stable_density.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "fkstable/special.hpp"

namespace fkstable {

namespace {

constexpr Real kPi = std::numbers::pi;

// 12-point Gauss-Legendre nodes/weights on [-1, 1]
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

}  // namespace

StableDensity1D::StableDensity1D(Real alpha) : alpha_(alpha) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw std::domain_error("StableDensity1D: alpha in (0,2)");
  cauchy_ = std::abs(alpha - 1.0) < 1e-14;
  if (cauchy_) {
    head_max_ = 0.0;
    return;
  }
  // head = range where the tail series is not yet reliable
  if (alpha < 1.0) {
    const Real uc = std::pow(gamma_fn(2.0 * alpha + 1.0) / gamma_fn(alpha + 1.0), 1.0 / alpha);
    head_max_ = std::max(4.0, 3.0 * uc);
  } else {
    head_max_ = 16.0;
  }
  build_head_table();
}

Real StableDensity1D::at_zero() const { return gamma_fn(1.0 + 1.0 / alpha_) / kPi; }

// (1/pi) sum_{k>=1} (-1)^{k+1} Gamma(alpha k + 1)/k! sin(k pi alpha / 2) u^{-alpha k - 1}.
// Convergent for alpha < 1; asymptotic with optimal truncation for alpha > 1.
Real StableDensity1D::density_series_tail(Real u, Real* err) const {
  const Real la = std::log(u);
  Real sum = 0.0, prev_abs = std::numeric_limits<Real>::infinity();
  Real max_abs = 0.0;
  Real last_term = 0.0;
  int k = 1;
  for (; k <= 220; ++k) {
    const Real s = std::sin(0.5 * k * kPi * alpha_);
    const Real lt = std::lgamma(alpha_ * k + 1.0) - std::lgamma(k + 1.0) - (alpha_ * k + 1.0) * la;
    const Real mag = std::exp(lt);
    const Real term = (k % 2 == 1 ? 1.0 : -1.0) * mag * s;
    if (mag > prev_abs && alpha_ > 1.0) break;  // past the optimal truncation point
    sum += term;
    last_term = mag;
    max_abs = std::max(max_abs, mag);
    prev_abs = mag;
    if (mag < 1e-17 * std::max(std::abs(sum), 1e-300)) {
      ++k;
      break;
    }
  }
  *err = last_term + 1e-15 * max_abs;  // remainder bound + cancellation noise
  return sum / kPi;
}

// (1/(pi alpha)) sum_{k>=0} (-1)^k Gamma((2k+1)/alpha)/(2k)! u^{2k}; convergent
// for alpha > 1, cancellation grows with u.
Real StableDensity1D::density_series_taylor(Real u, Real* err) const {
  const Real lu = u > 0.0 ? std::log(u) : -std::numeric_limits<Real>::infinity();
  Real sum = 0.0, max_abs = 0.0, mag = 0.0;
  for (int k = 0; k <= 200; ++k) {
    const Real lt =
        std::lgamma((2.0 * k + 1.0) / alpha_) - std::lgamma(2.0 * k + 1.0) + 2.0 * k * lu;
    mag = std::exp(lt);
    sum += (k % 2 == 0 ? 1.0 : -1.0) * mag;
    max_abs = std::max(max_abs, mag);
    if (mag < 1e-17 * std::max(std::abs(sum), 1e-300) && k > 2) break;
  }
  *err = (mag + 1e-15 * max_abs) / (kPi * alpha_);
  return sum / (kPi * alpha_);
}

Real StableDensity1D::density_quadrature(Real u) const {
  // (1/pi) int_0^X e^{-xi^alpha} cos(u xi) dxi with X = 37^{1/alpha}.
  // For alpha < 1 substitute v = xi^alpha to remove the cusp at zero.
  const Real X = std::pow(37.0, 1.0 / alpha_);
  std::vector<Real> cuts;
  if (alpha_ < 1.0) {
    const Real V = 37.0;
    auto f = [&](Real v) {
      const Real xi = std::pow(v, 1.0 / alpha_);
      return std::exp(-v) * std::cos(u * xi) * xi / (alpha_ * v);
    };
    // breakpoints: geometric near 0, then one per half-period of the cosine
    cuts.push_back(0.0);
    for (Real v = V * 1e-12; v < V; v *= 2.0) cuts.push_back(v);
    const int half_periods = static_cast<int>(u * X / kPi) + 1;
    for (int j = 1; j <= half_periods; ++j) {
      const Real xi = j * kPi / std::max(u, 1e-300);
      if (xi < X) cuts.push_back(std::pow(xi, alpha_));
    }
    cuts.push_back(V);
    std::sort(cuts.begin(), cuts.end());
    Real s = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
      if (cuts[i + 1] > cuts[i]) s += gauss_panel(f, cuts[i], cuts[i + 1]);
    return s / kPi;
  }
  auto f = [&](Real xi) { return std::exp(-std::pow(xi, alpha_)) * std::cos(u * xi); };
  cuts.push_back(0.0);
  const int half_periods = static_cast<int>(u * X / kPi) + 1;
  for (int j = 1; j <= half_periods; ++j) {
    const Real xi = j * kPi / std::max(u, 1e-300);
    if (xi < X) cuts.push_back(xi);
  }
  for (int j = 1; j < 16; ++j) cuts.push_back(X * j / 16.0);
  cuts.push_back(X);
  std::sort(cuts.begin(), cuts.end());
  Real s = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    if (cuts[i + 1] > cuts[i]) s += gauss_panel(f, cuts[i], cuts[i + 1]);
  return s / kPi;
}

Real StableDensity1D::density(Real u) const {
  u = std::abs(u);
  if (cauchy_) return 1.0 / (kPi * (1.0 + u * u));
  if (u >= head_max_) {
    Real err = 0.0;
    const Real v = density_series_tail(u, &err);
    if (err < 1e-10 * std::max(v, 1e-300)) return v;
    return density_quadrature(u);
  }
  if (alpha_ > 1.0 && u <= 2.0) {
    Real err = 0.0;
    const Real v = density_series_taylor(u, &err);
    if (err < 1e-12 * std::max(v, 1e-300)) return v;
  }
  return density_quadrature(u);
}

void StableDensity1D::build_head_table() {
  const int n = 4096;  // knot count; Simpson on pairs of intervals
  head_du_ = head_max_ / n;
  head_q_.resize(n + 1);
  head_cum_.resize(n + 1);
  for (int i = 0; i <= n; ++i) head_q_[i] = density(i * head_du_);
  head_cum_[0] = 0.0;
  for (int i = 2; i <= n; i += 2) {
    head_cum_[i] =
        head_cum_[i - 2] + head_du_ / 3.0 * (head_q_[i - 2] + 4.0 * head_q_[i - 1] + head_q_[i]);
  }
  for (int i = 1; i <= n; i += 2) {
    // odd knots: integrate the local quadratic through (i-1, i, i+1)
    const int ip = std::min(i + 1, n);
    head_cum_[i] = head_cum_[i - 1] +
                   head_du_ / 12.0 * (5.0 * head_q_[i - 1] + 8.0 * head_q_[i] - head_q_[ip]);
  }
  total_head_ = head_cum_[n];
}

Real StableDensity1D::tail_mass(Real u) const {
  // int_u^inf q1 = (1/pi) sum (-1)^{k+1} Gamma(alpha k + 1)/k! sin(k pi alpha/2)
  //                u^{-alpha k}/(alpha k)
  const Real la = std::log(u);
  Real sum = 0.0, prev_abs = std::numeric_limits<Real>::infinity();
  for (int k = 1; k <= 220; ++k) {
    const Real s = std::sin(0.5 * k * kPi * alpha_);
    const Real lt = std::lgamma(alpha_ * k + 1.0) - std::lgamma(k + 1.0) - alpha_ * k * la -
                    std::log(alpha_ * k);
    const Real mag = std::exp(lt);
    if (mag > prev_abs && alpha_ > 1.0) break;
    sum += (k % 2 == 1 ? 1.0 : -1.0) * mag * s;
    prev_abs = mag;
    if (mag < 1e-17 * std::max(std::abs(sum), 1e-300)) break;
  }
  return sum / kPi;
}

Real StableDensity1D::cdf(Real u) const {
  if (cauchy_) return 0.5 + std::atan(u) / kPi;
  const Real a = std::abs(u);
  Real half;  // P(0 < Z <= a)
  if (a >= head_max_) {
    half = 0.5 - tail_mass(a);
  } else {
    const int i = std::min<int>(static_cast<int>(a / head_du_), head_q_.size() - 2);
    const Real x0 = i * head_du_;
    const Real w = a - x0;
    // Hermite step: the density is the exact derivative of the cumulative
    const Real q0 = head_q_[i], q1 = head_q_[i + 1];
    const Real c0 = head_cum_[i];
    half = c0 + w * q0 + 0.5 * w * w * (q1 - q0) / head_du_;
  }
  return u >= 0.0 ? 0.5 + half : 0.5 - half;
}

Real StableDensity1D::interval_mass(Real a, Real b) const {
  if (b <= a) return 0.0;
  return cdf(b) - cdf(a);
}

Real StableDensity1D::density_scaled(Real t, Real r) const {
  const Real s = std::pow(t, -1.0 / alpha_);
  return s * density(r * s);
}

Real StableDensity1D::interval_mass_scaled(Real t, Real a, Real b) const {
  const Real s = std::pow(t, -1.0 / alpha_);
  return interval_mass(a * s, b * s);
}

const StableDensity1D& stable_density(Real alpha) {
  static std::mutex mu;
  static std::map<Real, std::unique_ptr<StableDensity1D>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(alpha);
  if (it == cache.end())
    it = cache.emplace(alpha, std::make_unique<StableDensity1D>(alpha)).first;
  return *it->second;
}

Real free_kernel_1d(Real alpha, Real t, Real r) {
  if (!(t > 0.0)) throw std::domain_error("free_kernel_1d: t > 0 required");
  if (std::abs(alpha - 1.0) < 1e-14) return t / (kPi * (t * t + r * r));
  return stable_density(alpha).density_scaled(t, std::abs(r));
}

}  // namespace fkstable
