#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "mweica/types.hpp"

namespace mweica {

// Deterministic random source used everywhere in the library.
//
// The engine is std::mt19937_64 (fully specified by the standard) and every
// variate is derived from raw 64-bit draws with the explicit transforms
// below, so a seed reproduces the same stream on any conforming platform.
// The standard <random> distributions are deliberately not used: their
// output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1) with 53 random mantissa bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller; the second variate of each pair is
  // cached, so calls consume the underlying stream in a fixed pattern.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform01();  // (0, 1], keeps the log finite
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  // Zero-mean Laplace with the given scale parameter (variance 2*scale^2).
  double laplace(double scale) {
    const double u = uniform01() - 0.5;
    const double mag = std::log(1.0 - 2.0 * std::abs(u));
    return u >= 0.0 ? -scale * mag : scale * mag;
  }

  // Unbiased integer in [0, n) by rejection on the top of the 64-bit range.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  // First n entries of a Fisher-Yates shuffle of 0..k-1.
  std::vector<Index> sample_without_replacement(Index k, Index n) {
    std::vector<Index> idx(static_cast<std::size_t>(k));
    for (Index i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
    const Index take = std::min(n, k);
    for (Index i = 0; i < take; ++i) {
      const Index j = i + static_cast<Index>(below(std::uint64_t(k - i)));
      std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    idx.resize(static_cast<std::size_t>(take));
    return idx;
  }

  std::vector<Index> permutation(Index k) {
    return sample_without_replacement(k, k);
  }

  // splitmix64 of (seed, stream): decorrelated substream seeds for
  // per-column or per-trial generators.
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Matrix with independent standard normal entries.
inline Matrixd random_normal_matrix(Index rows, Index cols, Rng& rng) {
  Matrixd m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

}  // namespace mweica
