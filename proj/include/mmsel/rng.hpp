// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmsel Authors

#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <string_view>

namespace mmsel {

/// Engine used for every random draw in the toolkit.
using Rng = std::mt19937_64;

/// Identifier written into dataset headers and CSV comments.
inline constexpr std::string_view kRngAlgorithm = "mt19937_64+splitmix64";

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of substream `index` under `base`. Substreams are what make
/// per-sample and per-trial work order-independent.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return splitmix64(base ^ splitmix64(index));
}

inline Rng substream(std::uint64_t base, std::uint64_t index) {
  return Rng(derive_seed(base, index));
}

/// Standard circular complex Gaussian CN(0, 1).
inline std::complex<double> complex_gaussian(Rng& rng) {
  std::normal_distribution<double> normal(0.0, 0.70710678118654752440);
  const double re = normal(rng);
  const double im = normal(rng);
  return {re, im};
}

}  // namespace mmsel
