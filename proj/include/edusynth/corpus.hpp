// SPDX-License-Identifier: Apache-2.0
//
// Canonical in-memory representation of (user, action, outcome) logs.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace edusynth {

using ActionIndex = std::int32_t;

/// Opaque action identifiers with a dense 0..size()-1 index.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> names);

  /// Returns the index of `name`, adding it if absent.
  ActionIndex intern(std::string_view name);
  std::optional<ActionIndex> find(std::string_view name) const;
  const std::string& name(ActionIndex index) const { return names_.at(index); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::size_t size() const noexcept { return names_.size(); }

  bool operator==(const Vocabulary& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, ActionIndex> index_;
};

struct UserSequence {
  std::string user_id;
  std::vector<ActionIndex> actions;
  std::vector<std::uint8_t> outcomes;

  std::size_t size() const noexcept { return actions.size(); }
  bool operator==(const UserSequence&) const = default;
};

/// Immutable collection of per-user sequences over a shared vocabulary.
///
/// Invariants checked on construction: every sequence is non-empty with
/// matching action/outcome lengths, outcomes are 0/1, action indices are in
/// range and user ids are unique. The vocabulary may contain actions that no
/// sequence uses (splits keep the parent vocabulary).
class Corpus {
 public:
  Corpus() = default;
  Corpus(std::vector<UserSequence> sequences, Vocabulary vocabulary);

  const std::vector<UserSequence>& sequences() const noexcept { return sequences_; }
  const Vocabulary& vocabulary() const noexcept { return vocabulary_; }

  std::size_t num_users() const noexcept { return sequences_.size(); }
  std::size_t num_actions() const noexcept { return vocabulary_.size(); }
  /// Total number of records.
  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return sequences_.empty(); }

  std::size_t attempts(ActionIndex a) const { return attempts_.at(a); }
  std::size_t successes(ActionIndex a) const { return successes_.at(a); }
  const std::vector<std::size_t>& attempt_counts() const noexcept { return attempts_; }
  const std::vector<std::size_t>& success_counts() const noexcept { return successes_; }

  std::vector<std::string> user_ids() const;

 private:
  std::vector<UserSequence> sequences_;
  Vocabulary vocabulary_;
  std::vector<std::size_t> attempts_;
  std::vector<std::size_t> successes_;
  std::size_t size_ = 0;
};

/// Reads `user_id,action_id,outcome` CSV. Users appear in order of first
/// occurrence; rows keep file order within each user.
Corpus read_csv(std::istream& in);
Corpus load_csv(const std::filesystem::path& path);

void write_csv(const Corpus& corpus, std::ostream& out);
void save_csv(const Corpus& corpus, const std::filesystem::path& path);

/// Single pass: drops every record whose action has an empirical success
/// rate of exactly 0 or 1, then drops emptied users and reindexes.
Corpus filter_degenerate_actions(const Corpus& corpus);

/// Same users and rows, re-indexed over only the actions that occur, sorted by name.
/// Models fitted on the result do not depend on the original vocabulary order.
Corpus with_sorted_vocabulary(const Corpus& corpus);

struct CorpusSplit {
  Corpus training;
  Corpus holdout;
};

/// Uniformly random user partition; training receives ceil(U/2) users.
CorpusSplit split_half_users(const Corpus& corpus, std::uint64_t seed);

/// Keeps the users whose id is in `user_ids`, in corpus order, with the
/// full vocabulary.
Corpus select_users(const Corpus& corpus, const std::vector<std::string>& user_ids);

struct CorpusStats {
  std::size_t size = 0;
  std::size_t users = 0;
  std::size_t actions = 0;
  std::size_t repeat_median = 0;  ///< median over users of per-user median repeats
  std::size_t repeat_max = 0;     ///< max over users of per-user max repeats
  std::size_t length_min = 0;
  std::size_t length_median = 0;
  std::size_t length_max = 0;

  bool operator==(const CorpusStats&) const = default;
};

/// `actions` counts actions that occur at least once.
CorpusStats compute_stats(const Corpus& corpus);

/// Lower median; the input must be non-empty.
std::size_t lower_median(std::vector<std::size_t> values);

/// Number of attempts of each distinct action in one sequence, in order of
/// first appearance.
std::vector<std::size_t> repeat_counts(const UserSequence& sequence);

}  // namespace edusynth
