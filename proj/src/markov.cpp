// SPDX-License-Identifier: Apache-2.0
#include "edusynth/markov.hpp"

#include <algorithm>
#include <cmath>

#include "edusynth/error.hpp"

namespace edusynth {

namespace {

constexpr double kSumTolerance = 1e-9;

void build_cdf(const double* p, std::size_t n, double* cdf) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += p[i];
    cdf[i] = acc;
  }
  // Pin the last positive entry to 1 so a draw in [0, 1) always lands.
  for (std::size_t i = n; i-- > 0;) {
    if (p[i] > 0) {
      for (std::size_t j = i; j < n; ++j) cdf[j] = 1.0;
      break;
    }
  }
}

void check_distribution(const double* p, std::size_t n, const char* what) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(p[i] >= 0.0) || !std::isfinite(p[i])) throw Error(std::string(what) + " has a negative or non-finite entry");
    sum += p[i];
  }
  if (std::abs(sum - 1.0) > kSumTolerance) throw Error(std::string(what) + " does not sum to 1");
}

}  // namespace

MarkovModel::MarkovModel(Vocabulary vocabulary, std::vector<double> start, std::vector<double> transitions,
                         std::size_t length_cap)
    : vocabulary_(std::move(vocabulary)),
      start_(std::move(start)),
      transitions_(std::move(transitions)),
      length_cap_(length_cap) {
  const std::size_t v = vocabulary_.size();
  if (v == 0) throw Error("Markov model needs a non-empty vocabulary");
  if (length_cap_ == 0) throw Error("length cap must be positive");
  if (start_.size() != v || transitions_.size() != v * (v + 1)) throw Error("Markov model dimensions do not match vocabulary");
  check_distribution(start_.data(), v, "start distribution");
  for (std::size_t s = 0; s < v; ++s) check_distribution(&transitions_[s * (v + 1)], v + 1, "transition row");

  start_cdf_.resize(v);
  build_cdf(start_.data(), v, start_cdf_.data());
  transition_cdf_.resize(transitions_.size());
  for (std::size_t s = 0; s < v; ++s) build_cdf(&transitions_[s * (v + 1)], v + 1, &transition_cdf_[s * (v + 1)]);
}

ActionIndex MarkovModel::draw(const double* cumulative, std::size_t n, Rng& rng) const {
  const double u = uniform01(rng);
  const auto* it = std::upper_bound(cumulative, cumulative + n, u);
  return static_cast<ActionIndex>(std::min<std::ptrdiff_t>(it - cumulative, static_cast<std::ptrdiff_t>(n) - 1));
}

std::vector<ActionIndex> MarkovModel::sample_sequence(Rng& rng) const {
  const std::size_t v = num_actions();
  std::vector<ActionIndex> seq;
  ActionIndex state = draw(start_cdf_.data(), v, rng);
  seq.push_back(state);
  while (seq.size() < length_cap_) {
    const ActionIndex next = draw(&transition_cdf_[static_cast<std::size_t>(state) * (v + 1)], v + 1, rng);
    if (next == stop_state()) break;
    seq.push_back(next);
    state = next;
  }
  return seq;
}

MarkovModel fit_markov(const Corpus& input, const MarkovFitOptions& options) {
  if (input.empty()) throw Error("cannot fit a Markov chain on an empty corpus");
  if (options.smoothing < 0) throw Error("smoothing must be non-negative");
  const Corpus corpus = with_sorted_vocabulary(input);
  const std::size_t v = corpus.num_actions();
  const std::size_t width = v + 1;

  std::vector<double> first(v, 0.0);
  std::vector<double> counts(v * width, 0.0);
  std::vector<double> occurrences(v, 0.0);
  for (const auto& seq : corpus.sequences()) {
    first[seq.actions.front()] += 1.0;
    for (std::size_t t = 0; t < seq.size(); ++t) {
      const auto s = static_cast<std::size_t>(seq.actions[t]);
      const std::size_t to = t + 1 < seq.size() ? static_cast<std::size_t>(seq.actions[t + 1]) : v;
      counts[s * width + to] += 1.0;
      occurrences[s] += 1.0;
    }
  }

  const double n_users = static_cast<double>(corpus.num_users());
  for (auto& p : first) p /= n_users;

  const double a = options.smoothing;
  for (std::size_t s = 0; s < v; ++s) {
    double* row = &counts[s * width];
    const double denom = occurrences[s] + a * static_cast<double>(width);
    if (denom == 0.0) {
      std::fill(row, row + width, 0.0);
      row[v] = 1.0;
      continue;
    }
    for (std::size_t u = 0; u < width; ++u) row[u] = (row[u] + a) / denom;
  }
  return MarkovModel(corpus.vocabulary(), std::move(first), std::move(counts), options.length_cap);
}

std::vector<std::vector<ActionIndex>> sample_markov(const MarkovModel& model, std::size_t n_sequences,
                                                    std::uint64_t seed) {
  std::vector<std::vector<ActionIndex>> out(n_sequences);
  const auto n = static_cast<std::ptrdiff_t>(n_sequences);
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    Rng rng = make_substream(seed, static_cast<std::uint64_t>(i));
    out[i] = model.sample_sequence(rng);
  }
  return out;
}

}  // namespace edusynth
