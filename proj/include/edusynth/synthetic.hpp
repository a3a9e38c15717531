// SPDX-License-Identifier: Apache-2.0
//
// Ground-truth corpora with known Markov dynamics and known Rasch
// parameters, used when the real datasets are not available.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "edusynth/corpus.hpp"

namespace edusynth {

struct SyntheticConfig {
  std::size_t users = 500;
  std::size_t actions = 50;
  /// Length = min_length + Geometric, with mean mean_length.
  std::size_t min_length = 20;
  double mean_length = 80.0;
  /// Dirichlet concentration of each transition row; small values give a
  /// few dominant successors per action.
  double concentration = 0.2;
  double ability_sd = 1.0;
  double difficulty_sd = 1.0;
  std::uint64_t seed = 0;
};

struct SyntheticDataset {
  Corpus corpus;
  std::map<std::string, double> theta;       ///< true ability per user
  std::map<std::string, double> difficulty;  ///< true difficulty per action
  std::vector<double> transitions;           ///< actions x actions, row-major
};

SyntheticDataset make_synthetic(const SyntheticConfig& config);

}  // namespace edusynth
