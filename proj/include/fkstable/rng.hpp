#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "fkstable/types.hpp"

namespace fkstable {

// Philox4x32-10 counter-based generator (Salmon et al., SC 2011).
// A stream is addressed by (root seed, replicate index); draws inside a
// stream walk the 64-bit block counter.  Identical (root, index) always
// reproduces the same sequence, independent of any parallel schedule.
class Philox {
 public:
  Philox(std::uint64_t root, std::uint64_t replicate)
      : key0_(static_cast<std::uint32_t>(root)),
        key1_(static_cast<std::uint32_t>(root >> 32)),
        rep_lo_(static_cast<std::uint32_t>(replicate)),
        rep_hi_(static_cast<std::uint32_t>(replicate >> 32)) {}

  std::uint64_t next_u64() {
    if (have_ == 0) refill();
    --have_;
    const std::uint64_t v =
        (static_cast<std::uint64_t>(out_[2 * have_ + 1]) << 32) | out_[2 * have_];
    return v;
  }

  // uniform in [0, 1)
  Real next_uniform() { return static_cast<Real>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in (0, 1]
  Real next_uniform_pos() { return 1.0 - next_uniform(); }

  Real next_exponential() { return -std::log(next_uniform_pos()); }

  // standard normal, Box-Muller (one value per call, pairs cached)
  Real next_normal() {
    if (has_gauss_) {
      has_gauss_ = false;
      return gauss_;
    }
    const Real u1 = next_uniform_pos();
    const Real u2 = next_uniform();
    const Real rad = std::sqrt(-2.0 * std::log(u1));
    const Real ang = 2.0 * std::numbers::pi * u2;
    gauss_ = rad * std::sin(ang);
    has_gauss_ = true;
    return rad * std::cos(ang);
  }

  static void block(const std::uint32_t ctr_in[4], const std::uint32_t key_in[2],
                    std::uint32_t out[4]);

 private:
  void refill() {
    const std::uint32_t ctr[4] = {static_cast<std::uint32_t>(counter_),
                                  static_cast<std::uint32_t>(counter_ >> 32), rep_lo_, rep_hi_};
    const std::uint32_t key[2] = {key0_, key1_};
    block(ctr, key, out_);
    ++counter_;
    have_ = 2;
  }

  std::uint32_t key0_, key1_, rep_lo_, rep_hi_;
  std::uint64_t counter_ = 0;
  std::uint32_t out_[4] = {0, 0, 0, 0};
  int have_ = 0;
  bool has_gauss_ = false;
  Real gauss_ = 0.0;
};

// One-sided stable subordinator draw S with Laplace transform
// E[e^{-u S}] = e^{-u^sigma}, sigma in (0,1); Chambers-Mallows-Stuck
// transform of a uniform and an exponential.
Real sample_subordinator(Real sigma, Philox& rng);

// Standard isotropic alpha-stable draw in R^d with characteristic function
// e^{-|xi|^alpha}: a Gaussian with variance 2S subordinated by S above
// (sigma = alpha/2).
void sample_stable(Real alpha, int d, Philox& rng, Point& out);

}  // namespace fkstable
