#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>

namespace acm::core {

/// Counter-based random stream (SplitMix64 finalizer over seed + counter).
///
/// Identical seed and identical call sequence give bit-identical values on
/// every platform; split() derives independent child streams so that each
/// consumer of randomness can be handed its own stream.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, n); n must be positive.
  std::size_t below(std::size_t n);
  /// Standard normal via Box-Muller.
  double normal();

  /// Child stream keyed by `stream`; does not advance this stream.
  Rng split(std::uint64_t stream) const;

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() { return next_u64(); }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace acm::core
