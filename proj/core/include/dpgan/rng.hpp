#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace dpgan {

/// Counter-based splittable generator. A stream is identified by a 64-bit key;
/// the n-th draw is a SplitMix64 finalizer applied to (key, n). Child streams
/// are derived from the parent key and a tag, so draws in one child never
/// perturb another.
class SplitRng {
 public:
  using result_type = std::uint64_t;

  explicit SplitRng(std::uint64_t seed = 0) noexcept;
  SplitRng(std::uint64_t key, std::uint64_t counter) noexcept : key_(key), counter_(counter) {}

  SplitRng split(std::uint64_t tag) const noexcept;
  SplitRng split(std::string_view tag) const noexcept;

  std::uint64_t next() noexcept;
  std::uint64_t operator()() noexcept { return next(); }
  static constexpr std::uint64_t min() noexcept { return 0; }
  static constexpr std::uint64_t max() noexcept { return ~std::uint64_t{0}; }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller (one value per call, no caching).
  double normal() noexcept;
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept;

  /// Fisher-Yates permutation of 0..n-1.
  std::vector<int> permutation(int n) noexcept;

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace dpgan
