// SPDX-License-Identifier: Apache-2.0
//
// First-order Markov chain over actions, augmented with an absorbing STOP
// state estimated from sequence-final tokens.
#pragma once

#include <cstdint>
#include <vector>

#include "edusynth/corpus.hpp"
#include "edusynth/rng.hpp"

namespace edusynth {

class MarkovModel {
 public:
  MarkovModel() = default;
  /// `transitions` is row-major V x (V+1); column V is STOP. Rows and the
  /// start vector must be non-negative and sum to 1 within 1e-9.
  MarkovModel(Vocabulary vocabulary, std::vector<double> start, std::vector<double> transitions,
              std::size_t length_cap);

  const Vocabulary& vocabulary() const noexcept { return vocabulary_; }
  std::size_t num_actions() const noexcept { return vocabulary_.size(); }
  ActionIndex stop_state() const noexcept { return static_cast<ActionIndex>(vocabulary_.size()); }
  std::size_t length_cap() const noexcept { return length_cap_; }

  double start_probability(ActionIndex a) const { return start_.at(a); }
  /// Pr(next = to | current = from); `to` may be stop_state().
  double transition(ActionIndex from, ActionIndex to) const {
    return transitions_.at(static_cast<std::size_t>(from) * (num_actions() + 1) + to);
  }
  const std::vector<double>& start() const noexcept { return start_; }
  const std::vector<double>& transitions() const noexcept { return transitions_; }

  /// One random walk: start draw, then transitions until STOP or the cap.
  std::vector<ActionIndex> sample_sequence(Rng& rng) const;

 private:
  ActionIndex draw(const double* cumulative, std::size_t n, Rng& rng) const;

  Vocabulary vocabulary_;
  std::vector<double> start_;
  std::vector<double> transitions_;
  std::vector<double> start_cdf_;
  std::vector<double> transition_cdf_;
  std::size_t length_cap_ = 1000;
};

struct MarkovFitOptions {
  double smoothing = 0.0;
  std::size_t length_cap = 1000;
};

/// Counts first actions, bigrams and sequence-final occurrences.
/// trans[s][u] = (n(s->u) + a) / (n(s) + a (V+1)), where n(s) counts every
/// occurrence of s and a is the smoothing. Rows of actions that never occur
/// become pure STOP when a = 0.
MarkovModel fit_markov(const Corpus& corpus, const MarkovFitOptions& options = {});

/// Sequence i uses substream (seed, i); parallel over sequences.
std::vector<std::vector<ActionIndex>> sample_markov(const MarkovModel& model, std::size_t n_sequences,
                                                    std::uint64_t seed);

}  // namespace edusynth
