#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string_view>
#include <utility>

namespace selrcn {

/// SplitMix64 step. Used for seeding and for hashing seed components.
std::uint64_t splitmix64(std::uint64_t& state);

/// Derives an independent 64-bit seed from a base seed and a list of
/// stream identifiers (epoch, batch, segment index, ...).
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts);

/// FNV-1a 64-bit hash. Stable across platforms, used to fold string ids
/// (video ids) into seeds.
std::uint64_t hash_string(std::string_view text);

/// xoshiro256** generator (Blackman & Vigna) seeded through SplitMix64.
///
/// All distributions are implemented here rather than through <random>
/// distributions, whose output differs between standard libraries; a given
/// seed therefore produces the same stream on every platform.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() { return next_u64(); }

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on [0, n). n must be positive.
  std::size_t below(std::size_t n);

  /// Standard normal via Box-Muller.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::array<std::uint64_t, 4> s_{};
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace selrcn
