#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace ctad {

// All stochastic stages draw from this engine. std::mt19937_64 is fully
// specified by the standard, so a fixed seed reproduces bit-identical
// streams on every platform; the distribution helpers below are hand-rolled
// because the standard <random> distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Unbiased integer in [0, n) via rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return x % n;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double real01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; u1 is kept in (0, 1].
  double normal() {
    const double u1 = static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53;
    const double u2 = real01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  // First m entries of a shuffled identity permutation of [0, n).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t m) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < m && i + 1 < n; ++i) {
      std::swap(idx[i], idx[i + below(n - i)]);
    }
    idx.resize(m);
    return idx;
  }

 private:
  std::mt19937_64 eng_;
};

inline constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Per-stage seed derivation: the base seed is combined with a stage name
// (and an optional index for per-item streams such as per-tree or per-trial
// seeds).  Documented in the README so runs can be reproduced stage by stage.
inline constexpr std::uint64_t derive_seed(std::uint64_t base, std::string_view stage,
                                           std::uint64_t index = 0) {
  return splitmix64(splitmix64(base ^ fnv1a64(stage)) + index);
}

}  // namespace ctad
