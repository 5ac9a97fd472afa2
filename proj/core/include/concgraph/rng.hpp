#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace concgraph {

/// splitmix64 finalizer; also used to derive child seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Stable seed derivation: the same (seed, tag) always yields the same child seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) noexcept;

/// xoshiro256** seeded through splitmix64.
///
/// All distributions are implemented here rather than through <random> so a stream is
/// bit-identical across standard libraries. Use `Rng::for_draw` to get the counter-based
/// generator for one draw index of a stream.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) noexcept;

  /// Independent generator for draw `index` of the stream keyed by `seed`.
  static Rng for_draw(std::uint64_t seed, std::uint64_t index) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }
  result_type operator()() noexcept { return next(); }

  std::uint64_t next() noexcept;

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, bound). `bound` must be > 0.
  std::uint64_t below(std::uint64_t bound) noexcept;

  bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Poisson variate by inversion; intended for small means (bootstrap weights).
  std::uint32_t poisson(double mean) noexcept;

 private:
  std::uint64_t s_[4];
};

}  // namespace concgraph
