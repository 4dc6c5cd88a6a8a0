#include "dpgan/rng.hpp"

#include <cmath>
#include <numbers>

namespace dpgan {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

SplitRng::SplitRng(std::uint64_t seed) noexcept : key_(mix64(seed + kGolden)) {}

SplitRng SplitRng::split(std::uint64_t tag) const noexcept {
  return SplitRng(mix64(key_ ^ mix64(tag + 0x632BE59BD9B4E019ULL)), 0);
}

SplitRng SplitRng::split(std::string_view tag) const noexcept {
  // FNV-1a, then the integer split.
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return split(h);
}

std::uint64_t SplitRng::next() noexcept {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double SplitRng::uniform() noexcept {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double SplitRng::normal() noexcept {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t SplitRng::below(std::uint64_t n) noexcept {
  if (n <= 1) return 0;
  // Rejection keeps the draw unbiased.
  const std::uint64_t limit = max() - max() % n;
  std::uint64_t v = next();
  while (v >= limit) v = next();
  return v % n;
}

std::vector<int> SplitRng::permutation(int n) noexcept {
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(below(static_cast<std::uint64_t>(i) + 1));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  return perm;
}

}  // namespace dpgan
