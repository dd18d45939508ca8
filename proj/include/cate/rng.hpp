#pragma once

#include <array>
#include <cstdint>

namespace cate {

//! Philox4x64-10 counter-based generator (Random123 family; the same variant
//! NumPy's Philox bit generator uses). A (key0, key1) pair selects an
//! independent stream; the 256-bit counter indexes draws within the stream.
class Philox4x64 {
 public:
  Philox4x64(std::uint64_t key0, std::uint64_t key1) : key_{key0, key1} {}

  void set_counter(std::uint64_t c0, std::uint64_t c1, std::uint64_t c2,
                   std::uint64_t c3) {
    counter_ = {c0, c1, c2, c3};
  }

  //! Output block at the current counter; advances the counter by one.
  std::array<std::uint64_t, 4> next_block();

  static std::array<std::uint64_t, 4> block(
      const std::array<std::uint64_t, 4>& counter,
      const std::array<std::uint64_t, 2>& key);

 private:
  std::array<std::uint64_t, 2> key_;
  std::array<std::uint64_t, 4> counter_{0, 0, 0, 0};
};

//! Buffered double/integer draws on top of Philox. Stream splitting is by
//! key: (seed, stream) pairs give independent sequences, so replications and
//! sweep cells can draw in parallel in any order without interference.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
      : gen_(seed, stream) {}

  std::uint64_t next_u64();

  //! Uniform on [0, 1) with 53-bit resolution.
  double uniform();
  double uniform(double lo, double hi);
  //! Standard normal via Box-Muller (second deviate cached).
  double normal();
  double normal(double mean, double sd);
  bool bernoulli(double p);
  //! Uniform integer in [0, n), rejection-sampled.
  std::uint64_t below(std::uint64_t n);

 private:
  Philox4x64 gen_;
  std::array<std::uint64_t, 4> buf_{};
  int buf_pos_ = 4;
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

//! Deterministic 64-bit sub-seed from (master, a, b), one Philox block.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                          std::uint64_t b = 0);

}  // namespace cate
