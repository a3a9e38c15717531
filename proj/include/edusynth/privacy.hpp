// SPDX-License-Identifier: Apache-2.0
//
// Membership-inference audit: an attacker holding the original population
// and a released dataset scores each original user by how well the release
// matches their action sequence, and the audit reports the ROC AUC of that
// score against true training membership.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "edusynth/corpus.hpp"

namespace edusynth {

using Symbol = std::int32_t;

/// Longest common subsequence by the two-row dynamic program:
/// O(|a| |b|) time, O(min(|a|, |b|)) memory.
std::size_t lcs_length(std::span<const Symbol> a, std::span<const Symbol> b);

/// Bit-parallel LCS against a fixed pattern (one 64-bit word per 64
/// pattern symbols), O(|text| * ceil(|pattern| / 64)) per query.
class LcsMatcher {
 public:
  /// Pattern symbols must lie in [0, alphabet_size).
  LcsMatcher(std::span<const Symbol> pattern, std::size_t alphabet_size);

  /// Text symbols outside [0, alphabet_size) never match.
  std::size_t lcs(std::span<const Symbol> text) const;
  std::size_t pattern_length() const noexcept { return length_; }

 private:
  std::size_t length_;
  std::size_t words_;
  std::vector<std::int32_t> slot_;      // symbol -> row in masks_, -1 if absent
  std::vector<std::uint64_t> masks_;  // rows of words_ words
};

struct MatchScore {
  std::string user_id;
  double score = 0.0;
  int label = 0;  ///< 1 if the user was in the training set
  bool operator==(const MatchScore&) const = default;
};

struct MatchOptions {
  /// Match (action, outcome) pairs instead of actions alone.
  bool include_outcomes = false;
};

/// Both corpora encoded over the original vocabulary. Fake actions absent
/// from the original vocabulary get a symbol no original action uses.
struct EncodedPair {
  std::vector<std::vector<Symbol>> original;
  std::vector<std::vector<Symbol>> fake;
  std::size_t alphabet_size = 0;
};
EncodedPair encode_for_matching(const Corpus& original, const Corpus& fake, const MatchOptions& options = {});

/// score(u) = max over fake sequences f of lcs(u, f) / |f|, for every
/// original user in corpus order. Labels are left at 0. Parallel over
/// original users; output equals match_scores_reference exactly.
std::vector<MatchScore> match_scores(const Corpus& original, const Corpus& fake, const MatchOptions& options = {});

/// Same, restricted to the original users flagged in `include` (one flag per
/// original user); skipped users are absent from the result.
std::vector<MatchScore> match_scores(const Corpus& original, const Corpus& fake, const std::vector<char>& include,
                                     const MatchOptions& options = {});

struct EntropyFilterResult {
  std::vector<double> entropy;  ///< per original user
  std::vector<char> retained;   ///< per original user
  double threshold = 0.0;
  double filtered_fraction = 0.0;
  std::size_t retained_count() const;
};

/// Cumulative entropy sum_t -p(j_t) ln p(j_t), p(j) = corpus frequency of
/// action j; a user is kept iff it exceeds -p ln p. Requires 0 < p < 1.
EntropyFilterResult entropy_filter(const Corpus& original, double p);

/// Mann-Whitney AUC with average ranks for ties, O(n log n). Throws unless
/// both classes are present.
double auc(std::span<const double> scores, std::span<const int> labels);
double auc(const std::vector<MatchScore>& scores);

struct AuditReport {
  double auc = 0.5;
  double p = 0.5;
  double entropy_threshold = 0.0;
  double filtered_fraction = 0.0;
  std::vector<MatchScore> scores;  ///< retained users only, original order
};

/// Entropy filter with p = |training| / |original|, LCS match scores for
/// the retained users labelled by training membership, and their AUC.
AuditReport reid_audit(const Corpus& original, const std::vector<std::string>& training_users, const Corpus& fake,
                       const MatchOptions& options = {});

}  // namespace edusynth
