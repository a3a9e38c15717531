// SPDX-License-Identifier: Apache-2.0
#include "edusynth/privacy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "edusynth/error.hpp"

namespace edusynth {

std::size_t lcs_length(std::span<const Symbol> a, std::span<const Symbol> b) {
  if (a.size() < b.size()) std::swap(a, b);
  // b is the shorter sequence; rows have |b| + 1 cells.
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      cur[j + 1] = a[i] == b[j] ? prev[j] + 1 : std::max(prev[j + 1], cur[j]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

LcsMatcher::LcsMatcher(std::span<const Symbol> pattern, std::size_t alphabet_size)
    : length_(pattern.size()), words_((pattern.size() + 63) / 64), slot_(alphabet_size, -1) {
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    const Symbol c = pattern[i];
    if (c < 0 || static_cast<std::size_t>(c) >= alphabet_size) throw Error("pattern symbol out of range");
    if (slot_[c] < 0) {
      slot_[c] = static_cast<std::int32_t>(masks_.size() / std::max<std::size_t>(words_, 1));
      masks_.resize(masks_.size() + words_, 0);
    }
    masks_[static_cast<std::size_t>(slot_[c]) * words_ + i / 64] |= std::uint64_t{1} << (i % 64);
  }
}

std::size_t LcsMatcher::lcs(std::span<const Symbol> text) const {
  if (length_ == 0) return 0;
  // Each zero bit of v below length_ marks one LCS step (Hyyro's formulation).
  std::vector<std::uint64_t> v(words_, ~std::uint64_t{0});
  const auto alphabet = static_cast<Symbol>(slot_.size());
  for (Symbol c : text) {
    if (c < 0 || c >= alphabet || slot_[c] < 0) continue;
    const std::uint64_t* m = &masks_[static_cast<std::size_t>(slot_[c]) * words_];
    std::uint64_t carry = 0;
    for (std::size_t w = 0; w < words_; ++w) {
      const std::uint64_t u = v[w] & m[w];
      const std::uint64_t t = v[w] + u;
      const std::uint64_t c1 = t < v[w];
      const std::uint64_t sum = t + carry;
      carry = c1 | (sum < t);
      v[w] = sum | (v[w] & ~m[w]);
    }
  }
  std::size_t ones = 0;
  for (std::size_t w = 0; w + 1 < words_; ++w) ones += static_cast<std::size_t>(std::popcount(v[w]));
  const std::size_t tail = length_ - 64 * (words_ - 1);
  const std::uint64_t tail_mask = tail == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << tail) - 1;
  ones += static_cast<std::size_t>(std::popcount(v[words_ - 1] & tail_mask));
  return length_ - ones;
}

EncodedPair encode_for_matching(const Corpus& original, const Corpus& fake, const MatchOptions& options) {
  const auto v = static_cast<Symbol>(original.num_actions());
  const Symbol unknown = options.include_outcomes ? 2 * v : v;
  EncodedPair enc;
  enc.alphabet_size = static_cast<std::size_t>(unknown) + 1;

  auto encode = [&](const UserSequence& s, const std::vector<Symbol>& remap) {
    std::vector<Symbol> out(s.size());
    for (std::size_t t = 0; t < s.size(); ++t) {
      const Symbol a = remap[s.actions[t]];
      out[t] = a == unknown ? unknown : (options.include_outcomes ? 2 * a + s.outcomes[t] : a);
    }
    return out;
  };

  std::vector<Symbol> identity(original.num_actions());
  std::iota(identity.begin(), identity.end(), 0);
  std::vector<Symbol> fake_remap(fake.num_actions(), unknown);
  for (std::size_t a = 0; a < fake.num_actions(); ++a) {
    if (auto idx = original.vocabulary().find(fake.vocabulary().name(static_cast<ActionIndex>(a)))) fake_remap[a] = *idx;
  }
  for (const auto& s : original.sequences()) enc.original.push_back(encode(s, identity));
  for (const auto& s : fake.sequences()) enc.fake.push_back(encode(s, fake_remap));
  return enc;
}

std::vector<MatchScore> match_scores(const Corpus& original, const Corpus& fake, const std::vector<char>& include,
                                     const MatchOptions& options) {
  if (fake.empty()) throw Error("fake corpus is empty");
  if (include.size() != original.num_users()) throw Error("include mask does not match original users");
  const EncodedPair enc = encode_for_matching(original, fake, options);

  std::vector<std::size_t> users;
  for (std::size_t u = 0; u < include.size(); ++u)
    if (include[u]) users.push_back(u);

  std::vector<double> best(users.size(), 0.0);
  const auto n = static_cast<std::ptrdiff_t>(users.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto& pattern = enc.original[users[k]];
    const LcsMatcher matcher(pattern, enc.alphabet_size);
    double top = 0.0;
    for (const auto& f : enc.fake) {
      const double lf = static_cast<double>(f.size());
      if (static_cast<double>(std::min(pattern.size(), f.size())) / lf <= top) continue;
      top = std::max(top, static_cast<double>(matcher.lcs(f)) / lf);
      if (top >= 1.0) break;
    }
    best[k] = top;
  }

  std::vector<MatchScore> out;
  out.reserve(users.size());
  for (std::size_t k = 0; k < users.size(); ++k)
    out.push_back({original.sequences()[users[k]].user_id, best[k], 0});
  return out;
}

std::vector<MatchScore> match_scores(const Corpus& original, const Corpus& fake, const MatchOptions& options) {
  return match_scores(original, fake, std::vector<char>(original.num_users(), 1), options);
}

std::size_t EntropyFilterResult::retained_count() const {
  return static_cast<std::size_t>(std::count(retained.begin(), retained.end(), 1));
}

EntropyFilterResult entropy_filter(const Corpus& original, double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error("entropy filter proportion must lie in (0, 1)");
  if (original.empty()) throw Error("empty dataset");
  const double total = static_cast<double>(original.size());
  std::vector<double> term(original.num_actions(), 0.0);
  for (std::size_t a = 0; a < term.size(); ++a) {
    const double freq = static_cast<double>(original.attempts(static_cast<ActionIndex>(a))) / total;
    term[a] = freq > 0.0 ? -freq * std::log(freq) : 0.0;
  }

  EntropyFilterResult res;
  res.threshold = -p * std::log(p);
  for (const auto& s : original.sequences()) {
    double h = 0.0;
    for (ActionIndex a : s.actions) h += term[a];
    res.entropy.push_back(h);
    res.retained.push_back(h > res.threshold ? 1 : 0);
  }
  res.filtered_fraction =
      1.0 - static_cast<double>(res.retained_count()) / static_cast<double>(original.num_users());
  return res;
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw Error("scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // Ranks i+1..j share their average.
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]]) {
        positive_rank_sum += avg_rank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) throw Error("AUC needs both positive and negative labels");
  const double pos = static_cast<double>(positives);
  const double u = positive_rank_sum - pos * (pos + 1.0) / 2.0;
  return u / (pos * static_cast<double>(negatives));
}

double auc(const std::vector<MatchScore>& scores) {
  std::vector<double> s;
  std::vector<int> l;
  for (const auto& m : scores) {
    s.push_back(m.score);
    l.push_back(m.label);
  }
  return auc(s, l);
}

AuditReport reid_audit(const Corpus& original, const std::vector<std::string>& training_users, const Corpus& fake,
                       const MatchOptions& options) {
  std::unordered_set<std::string> training(training_users.begin(), training_users.end());
  std::unordered_set<std::string> known;
  for (const auto& s : original.sequences()) known.insert(s.user_id);
  for (const auto& id : training)
    if (!known.count(id)) throw Error("training user '" + id + "' is not in the original corpus");
  if (training.empty()) throw Error("training user set is empty");

  AuditReport report;
  report.p = static_cast<double>(training.size()) / static_cast<double>(original.num_users());
  if (report.p >= 1.0) throw Error("training user set covers the whole original corpus");
  const auto filter = entropy_filter(original, report.p);
  report.entropy_threshold = filter.threshold;
  report.filtered_fraction = filter.filtered_fraction;
  report.scores = match_scores(original, fake, filter.retained, options);
  for (auto& m : report.scores) m.label = training.count(m.user_id) ? 1 : 0;
  report.auc = auc(report.scores);
  return report;
}

}  // namespace edusynth
