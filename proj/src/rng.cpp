#include "cate/rng.hpp"

#include <cmath>

namespace cate {

namespace {

constexpr std::uint64_t kMult0 = 0xD2E7470EE14C6C93ull;
constexpr std::uint64_t kMult1 = 0xCA5A826395121157ull;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ull;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73Bull;

inline std::uint64_t mulhilo(std::uint64_t a, std::uint64_t b,
                             std::uint64_t* hi) {
  const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  *hi = static_cast<std::uint64_t>(p >> 64);
  return static_cast<std::uint64_t>(p);
}

inline void philox_round(std::array<std::uint64_t, 4>& x,
                         const std::array<std::uint64_t, 2>& k) {
  std::uint64_t hi0, hi1;
  const std::uint64_t lo0 = mulhilo(kMult0, x[0], &hi0);
  const std::uint64_t lo1 = mulhilo(kMult1, x[2], &hi1);
  x = {hi1 ^ x[1] ^ k[0], lo1, hi0 ^ x[3] ^ k[1], lo0};
}

}  // namespace

std::array<std::uint64_t, 4> Philox4x64::block(
    const std::array<std::uint64_t, 4>& counter,
    const std::array<std::uint64_t, 2>& key) {
  std::array<std::uint64_t, 4> x = counter;
  std::array<std::uint64_t, 2> k = key;
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      k[0] += kWeyl0;
      k[1] += kWeyl1;
    }
    philox_round(x, k);
  }
  return x;
}

std::array<std::uint64_t, 4> Philox4x64::next_block() {
  const auto out = block(counter_, key_);
  for (int w = 0; w < 4; ++w) {
    if (++counter_[w] != 0) break;  // propagate carry
  }
  return out;
}

std::uint64_t RngStream::next_u64() {
  if (buf_pos_ == 4) {
    buf_ = gen_.next_block();
    buf_pos_ = 0;
  }
  return buf_[buf_pos_++];
}

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double RngStream::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  // u1 in (0, 1] keeps the log finite
  const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  cached_normal_ = r * std::sin(theta);
  has_cached_normal_ = true;
  return r * std::cos(theta);
}

double RngStream::normal(double mean, double sd) {
  return mean + sd * normal();
}

bool RngStream::bernoulli(double p) { return uniform() < p; }

std::uint64_t RngStream::below(std::uint64_t n) {
  if (n == 0) return 0;
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % n;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                          std::uint64_t b) {
  // Fixed salts so sub-seed derivation cannot collide with stream 0 draws.
  const auto out = Philox4x64::block({a, b, 0x8BB84B93962EACC9ull, 0},
                                     {master, 0xD1B54A32D192ED03ull});
  return out[0];
}

}  // namespace cate
