// SPDX-License-Identifier: Apache-2.0
#include "edusynth/synthetic.hpp"

#include <algorithm>
#include <cstdio>

#include "edusynth/error.hpp"
#include "edusynth/irt.hpp"
#include "edusynth/rng.hpp"

namespace edusynth {

namespace {

std::string numbered(const char* prefix, std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
  return buf;
}

}  // namespace

SyntheticDataset make_synthetic(const SyntheticConfig& c) {
  if (c.users < 2 || c.actions < 2) throw Error("synthetic corpus needs at least 2 users and 2 actions");
  if (c.min_length == 0 || c.mean_length < static_cast<double>(c.min_length))
    throw Error("need 1 <= min_length <= mean_length");
  if (!(c.concentration > 0)) throw Error("concentration must be positive");

  SyntheticDataset out;
  const std::size_t v = c.actions;
  std::vector<std::string> names;
  for (std::size_t a = 0; a < v; ++a) names.push_back(numbered("a", a, 3));
  Vocabulary vocab(names);

  Rng rng(substream_seed(c.seed, 0));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> d(v);
  for (std::size_t a = 0; a < v; ++a) {
    d[a] = c.difficulty_sd * normal(rng);
    out.difficulty[names[a]] = d[a];
  }

  std::gamma_distribution<double> gamma(c.concentration, 1.0);
  out.transitions.assign(v * v, 0.0);
  std::vector<double> cdf(v * v);
  for (std::size_t s = 0; s < v; ++s) {
    double sum = 0.0;
    for (std::size_t u = 0; u < v; ++u) sum += out.transitions[s * v + u] = gamma(rng) + 1e-12;
    double acc = 0.0;
    for (std::size_t u = 0; u < v; ++u) {
      out.transitions[s * v + u] /= sum;
      acc += out.transitions[s * v + u];
      cdf[s * v + u] = acc;
    }
    cdf[s * v + v - 1] = 1.0;
  }

  const double extra = c.mean_length - static_cast<double>(c.min_length);
  std::vector<UserSequence> seqs;
  for (std::size_t i = 0; i < c.users; ++i) {
    Rng urng = make_substream(c.seed, i + 1);
    const std::string id = numbered("u", i, 5);
    const double theta = c.ability_sd * std::normal_distribution<double>(0.0, 1.0)(urng);
    out.theta[id] = theta;
    std::size_t len = c.min_length;
    if (extra > 0) len += std::geometric_distribution<std::size_t>(1.0 / (extra + 1.0))(urng);

    UserSequence s{id, {}, {}};
    auto state = static_cast<std::size_t>(std::uniform_int_distribution<std::size_t>(0, v - 1)(urng));
    for (std::size_t t = 0; t < len; ++t) {
      if (t > 0) {
        const double u = uniform01(urng);
        const double* row = &cdf[state * v];
        state = static_cast<std::size_t>(std::upper_bound(row, row + v, u) - row);
        state = std::min(state, v - 1);
      }
      s.actions.push_back(static_cast<ActionIndex>(state));
      s.outcomes.push_back(uniform01(urng) < sigmoid(theta - d[state]) ? 1 : 0);
    }
    seqs.push_back(std::move(s));
  }
  out.corpus = Corpus(std::move(seqs), std::move(vocab));
  return out;
}

}  // namespace edusynth
