// SPDX-License-Identifier: Apache-2.0
#include "edusynth/drop.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <unordered_set>

#include "edusynth/error.hpp"
#include "edusynth/rng.hpp"

namespace edusynth {

Corpus drop_and_renumber(const Corpus& training, double ratio, std::uint64_t seed) {
  if (!(ratio >= 0.0 && ratio < 1.0)) throw Error("drop ratio must lie in [0, 1)");
  const std::size_t size = training.size();
  const auto n_drop = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(size)));
  Rng rng(seed);

  // Partial Fisher-Yates: the first n_drop slots are the dropped rows.
  std::vector<std::size_t> rows(size);
  std::iota(rows.begin(), rows.end(), 0);
  for (std::size_t i = 0; i < n_drop; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, size - 1);
    std::swap(rows[i], rows[pick(rng)]);
  }
  std::vector<char> dropped(size, 0);
  for (std::size_t i = 0; i < n_drop; ++i) dropped[rows[i]] = 1;

  std::vector<UserSequence> kept;
  std::size_t row = 0;
  for (const auto& seq : training.sequences()) {
    UserSequence out;
    for (std::size_t t = 0; t < seq.size(); ++t, ++row) {
      if (dropped[row]) continue;
      out.actions.push_back(seq.actions[t]);
      out.outcomes.push_back(seq.outcomes[t]);
    }
    if (!out.actions.empty()) kept.push_back(std::move(out));
  }

  std::shuffle(kept.begin(), kept.end(), rng);
  std::unordered_set<std::string> taken;
  for (const auto& seq : training.sequences()) taken.insert(seq.user_id);
  for (auto& seq : kept) {
    std::string id;
    do {
      char buf[17];
      std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng()));
      id = buf;
    } while (!taken.insert(id).second);
    seq.user_id = std::move(id);
  }
  return Corpus(std::move(kept), training.vocabulary());
}

}  // namespace edusynth
