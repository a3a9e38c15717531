// SPDX-License-Identifier: Apache-2.0
#include "edusynth/reference.hpp"

#include <algorithm>

#include "edusynth/error.hpp"
#include "edusynth/rng.hpp"

namespace edusynth::reference {

std::vector<MatchScore> match_scores(const Corpus& original, const Corpus& fake, const MatchOptions& options) {
  if (fake.empty()) throw Error("fake corpus is empty");
  const EncodedPair enc = encode_for_matching(original, fake, options);
  std::vector<MatchScore> out;
  for (std::size_t u = 0; u < enc.original.size(); ++u) {
    double best = 0.0;
    for (const auto& f : enc.fake)
      best = std::max(best, static_cast<double>(lcs_length(enc.original[u], f)) / static_cast<double>(f.size()));
    out.push_back({original.sequences()[u].user_id, best, 0});
  }
  return out;
}

std::vector<std::vector<ActionIndex>> sample_markov(const MarkovModel& model, std::size_t n_sequences,
                                                    std::uint64_t seed) {
  std::vector<std::vector<ActionIndex>> out;
  out.reserve(n_sequences);
  for (std::size_t i = 0; i < n_sequences; ++i) {
    Rng rng = make_substream(seed, i);
    out.push_back(model.sample_sequence(rng));
  }
  return out;
}

std::vector<UserSequence> generate_outcomes(const IrtModel& model, const AbilityPrior& prior, const Vocabulary& vocab,
                                            const std::vector<std::vector<ActionIndex>>& action_sequences,
                                            std::uint64_t seed) {
  std::vector<UserSequence> out;
  for (std::size_t i = 0; i < action_sequences.size(); ++i) {
    Rng rng = make_substream(seed, i);
    const double theta = prior.mu + prior.sigma * std::normal_distribution<double>(0.0, 1.0)(rng);
    UserSequence s{fake_user_id("fake-", i), action_sequences[i], {}};
    for (ActionIndex a : s.actions) {
      const auto d = model.find_difficulty(vocab.name(a));
      if (!d) throw Error("unknown action '" + vocab.name(a) + "'");
      s.outcomes.push_back(uniform01(rng) < sigmoid(theta - *d) ? 1 : 0);
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace edusynth::reference
