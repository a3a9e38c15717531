// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace edusynth {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to decorrelate derived seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed of the independent random stream `index` under `seed`. Kernels that
/// run in parallel draw one substream per work item so output does not
/// depend on the thread count.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) noexcept;

inline Rng make_substream(std::uint64_t seed, std::uint64_t index) {
  return Rng(substream_seed(seed, index));
}

/// Stage seed = mix(master, FNV-1a(stage)). Stable across releases; the
/// pipeline report lists every derived seed so stages can be re-run by hand.
std::uint64_t stage_seed(std::uint64_t master, std::string_view stage) noexcept;

/// Uniform double in [0, 1).
inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace edusynth
