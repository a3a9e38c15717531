// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "edusynth/corpus.hpp"
#include "edusynth/error.hpp"
#include "edusynth/irt.hpp"

namespace edusynth {

using DifficultyMap = std::map<std::string, double>;
using WeightMap = std::map<std::string, double>;

struct RmseResult {
  double value = 0.0;
  /// Weight share of actions that could not be compared (missing from one
  /// of the fits), before renormalisation.
  double excluded_weight = 0.0;
  std::size_t compared = 0;
};

/// sqrt(sum_i w_i (d_i - d'_i)^2) over actions present in both maps, with
/// the weights restricted to that intersection and renormalised to 1.
/// `weights` = nullopt means uniform weights. Throws on an empty
/// intersection or zero total weight.
RmseResult difficulty_rmse(const DifficultyMap& real, const DifficultyMap& fake,
                           const std::optional<WeightMap>& weights = std::nullopt);

/// Occurrences / corpus size, per action name (actions with no attempts omitted).
WeightMap action_frequencies(const Corpus& corpus);

using CountHistogram = std::map<std::size_t, std::size_t>;
using ActionHistogram = std::map<std::string, std::size_t>;

struct HistogramBundle {
  ActionHistogram actions;   ///< occurrences per action
  CountHistogram lengths;    ///< sequence length -> users
  CountHistogram repeats;    ///< attempts of one action by one user -> (user, action) pairs

  /// Actions by decreasing count (ties by name), for plotting.
  std::vector<std::pair<std::string, std::size_t>> actions_by_count() const;
};

HistogramBundle histograms(const Corpus& corpus);

/// Total-variation distance between the normalised histograms; missing
/// keys count as zero. Throws if either histogram is empty.
template <class Key>
double histogram_distance(const std::map<Key, std::size_t>& a, const std::map<Key, std::size_t>& b) {
  double ta = 0.0, tb = 0.0;
  for (const auto& [_, c] : a) ta += static_cast<double>(c);
  for (const auto& [_, c] : b) tb += static_cast<double>(c);
  if (ta == 0.0 || tb == 0.0) throw Error("histogram is empty");
  double sum = 0.0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() || ib != b.end()) {
    if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
      sum += static_cast<double>(ia->second) / ta;
      ++ia;
    } else if (ia == a.end() || ib->first < ia->first) {
      sum += static_cast<double>(ib->second) / tb;
      ++ib;
    } else {
      sum += std::abs(static_cast<double>(ia->second) / ta - static_cast<double>(ib->second) / tb);
      ++ia;
      ++ib;
    }
  }
  return 0.5 * sum;
}

struct UtilityReport {
  double rmse = 0.0;
  double wrmse = 0.0;
  double excluded_weight = 0.0;
  double tv_action_hist = 0.0;
  double tv_length_hist = 0.0;
};

/// Difficulty agreement between the two fits (weights = training action
/// frequencies for wRMSE) plus histogram distances training vs fake.
UtilityReport evaluate_utility(const Corpus& training, const IrtModel& training_fit, const Corpus& fake,
                               const IrtModel& fake_fit);

}  // namespace edusynth
