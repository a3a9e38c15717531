// SPDX-License-Identifier: Apache-2.0
//
// Serial, straightforward versions of the parallel kernels. Tests check the
// kernels against these and the benchmark reports the speedup.
#pragma once

#include <cstdint>
#include <vector>

#include "edusynth/irt.hpp"
#include "edusynth/markov.hpp"
#include "edusynth/privacy.hpp"

namespace edusynth::reference {

/// All-pairs two-row DP, no pruning, single thread.
std::vector<MatchScore> match_scores(const Corpus& original, const Corpus& fake, const MatchOptions& options = {});

std::vector<std::vector<ActionIndex>> sample_markov(const MarkovModel& model, std::size_t n_sequences,
                                                    std::uint64_t seed);

std::vector<UserSequence> generate_outcomes(const IrtModel& model, const AbilityPrior& prior, const Vocabulary& vocab,
                                            const std::vector<std::vector<ActionIndex>>& action_sequences,
                                            std::uint64_t seed);

}  // namespace edusynth::reference
