#include "fkstable/rng.hpp"

namespace fkstable {

namespace {

constexpr std::uint32_t kWeylA = 0x9E3779B9u;
constexpr std::uint32_t kWeylB = 0xBB67AE85u;
constexpr std::uint32_t kMulA = 0xD2511F53u;
constexpr std::uint32_t kMulB = 0xCD9E8D57u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  lo = static_cast<std::uint32_t>(p);
  hi = static_cast<std::uint32_t>(p >> 32);
}

inline void round_once(std::uint32_t ctr[4], const std::uint32_t key[2]) {
  std::uint32_t lo0, hi0, lo1, hi1;
  mulhilo(kMulA, ctr[0], lo0, hi0);
  mulhilo(kMulB, ctr[2], lo1, hi1);
  const std::uint32_t r0 = hi1 ^ ctr[1] ^ key[0];
  const std::uint32_t r1 = lo1;
  const std::uint32_t r2 = hi0 ^ ctr[3] ^ key[1];
  const std::uint32_t r3 = lo0;
  ctr[0] = r0;
  ctr[1] = r1;
  ctr[2] = r2;
  ctr[3] = r3;
}

}  // namespace

void Philox::block(const std::uint32_t ctr_in[4], const std::uint32_t key_in[2],
                   std::uint32_t out[4]) {
  std::uint32_t ctr[4] = {ctr_in[0], ctr_in[1], ctr_in[2], ctr_in[3]};
  std::uint32_t key[2] = {key_in[0], key_in[1]};
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      key[0] += kWeylA;
      key[1] += kWeylB;
    }
    round_once(ctr, key);
  }
  out[0] = ctr[0];
  out[1] = ctr[1];
  out[2] = ctr[2];
  out[3] = ctr[3];
}

Real sample_subordinator(Real sigma, Philox& rng) {
  // S = cos(pi sigma / 2)^{1/sigma} * X, X totally skewed CMS draw of index
  // sigma with unit Zolotarev scale; then E[e^{-uS}] = e^{-u^sigma}.
  const Real half_pi = 0.5 * std::numbers::pi;
  const Real v = half_pi * (2.0 * rng.next_uniform() - 1.0);  // U(-pi/2, pi/2)
  const Real w = rng.next_exponential();
  const Real shifted = sigma * (v + half_pi);
  const Real x = std::sin(shifted) / std::pow(std::cos(v), 1.0 / sigma) *
                 std::pow(std::cos(v - shifted) / w, (1.0 - sigma) / sigma);
  return std::pow(std::cos(half_pi * sigma), 1.0 / sigma) * x;
}

void sample_stable(Real alpha, int d, Philox& rng, Point& out) {
  const Real s = sample_subordinator(0.5 * alpha, rng);
  const Real scale = std::sqrt(2.0 * s);
  for (int i = 0; i < d; ++i) out(i) = scale * rng.next_normal();
}

}  // namespace fkstable
