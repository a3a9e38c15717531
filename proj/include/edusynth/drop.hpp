// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "edusynth/corpus.hpp"

namespace edusynth {

/// Pseudonymization baseline. Removes floor(ratio * size) records chosen
/// uniformly over the whole corpus, keeps the surviving per-user order,
/// drops emptied users, then gives every user a fresh random 64-bit id
/// (hex) that collides with no input id. Output user order is shuffled.
/// Requires 0 <= ratio < 1.
Corpus drop_and_renumber(const Corpus& training, double ratio, std::uint64_t seed);

}  // namespace edusynth
