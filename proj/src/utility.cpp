// SPDX-License-Identifier: Apache-2.0
#include "edusynth/utility.hpp"

#include <algorithm>

namespace edusynth {

RmseResult difficulty_rmse(const DifficultyMap& real, const DifficultyMap& fake,
                           const std::optional<WeightMap>& weights) {
  auto weight_of = [&](const std::string& action) {
    if (!weights) return 1.0;
    auto it = weights->find(action);
    return it == weights->end() ? 0.0 : it->second;
  };

  double total = 0.0;
  if (weights) {
    for (const auto& [action, w] : *weights) {
      if (w < 0) throw Error("weights must be non-negative");
      total += w;
    }
  } else {
    total = static_cast<double>(real.size());
  }

  double kept = 0.0;
  double acc = 0.0;
  std::size_t compared = 0;
  for (const auto& [action, d] : real) {
    auto it = fake.find(action);
    if (it == fake.end()) continue;
    const double w = weight_of(action);
    const double diff = d - it->second;
    acc += w * diff * diff;
    kept += w;
    ++compared;
  }
  if (compared == 0) throw Error("no action has a difficulty in both fits");
  if (kept <= 0.0) throw Error("compared actions carry zero weight");
  return {std::sqrt(acc / kept), total > 0 ? std::max(0.0, 1.0 - kept / total) : 0.0, compared};
}

WeightMap action_frequencies(const Corpus& corpus) {
  WeightMap w;
  const double n = static_cast<double>(corpus.size());
  for (std::size_t a = 0; a < corpus.num_actions(); ++a) {
    const auto c = corpus.attempts(static_cast<ActionIndex>(a));
    if (c > 0) w[corpus.vocabulary().name(static_cast<ActionIndex>(a))] = static_cast<double>(c) / n;
  }
  return w;
}

std::vector<std::pair<std::string, std::size_t>> HistogramBundle::actions_by_count() const {
  std::vector<std::pair<std::string, std::size_t>> out(actions.begin(), actions.end());
  std::stable_sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.second > y.second; });
  return out;
}

HistogramBundle histograms(const Corpus& corpus) {
  if (corpus.empty()) throw Error("empty dataset");
  HistogramBundle h;
  for (std::size_t a = 0; a < corpus.num_actions(); ++a) {
    const auto c = corpus.attempts(static_cast<ActionIndex>(a));
    if (c > 0) h.actions[corpus.vocabulary().name(static_cast<ActionIndex>(a))] = c;
  }
  for (const auto& s : corpus.sequences()) {
    ++h.lengths[s.size()];
    for (auto r : repeat_counts(s)) ++h.repeats[r];
  }
  return h;
}

UtilityReport evaluate_utility(const Corpus& training, const IrtModel& training_fit, const Corpus& fake,
                               const IrtModel& fake_fit) {
  UtilityReport r;
  r.rmse = difficulty_rmse(training_fit.difficulty(), fake_fit.difficulty()).value;
  const auto weighted = difficulty_rmse(training_fit.difficulty(), fake_fit.difficulty(), action_frequencies(training));
  r.wrmse = weighted.value;
  r.excluded_weight = weighted.excluded_weight;
  const auto ht = histograms(training);
  const auto hf = histograms(fake);
  r.tv_action_hist = histogram_distance(ht.actions, hf.actions);
  r.tv_length_hist = histogram_distance(ht.lengths, hf.lengths);
  return r;
}

}  // namespace edusynth
