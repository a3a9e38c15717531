// SPDX-License-Identifier: Apache-2.0
#include "edusynth/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <unordered_set>

#include "edusynth/error.hpp"
#include "edusynth/rng.hpp"

namespace edusynth {

Vocabulary::Vocabulary(std::vector<std::string> names) {
  for (auto& n : names) {
    if (find(n)) throw Error("duplicate action id '" + n + "' in vocabulary");
    intern(n);
  }
}

ActionIndex Vocabulary::intern(std::string_view name) {
  auto it = index_.find(std::string(name));
  if (it != index_.end()) return it->second;
  const auto idx = static_cast<ActionIndex>(names_.size());
  names_.emplace_back(name);
  index_.emplace(names_.back(), idx);
  return idx;
}

std::optional<ActionIndex> Vocabulary::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Corpus::Corpus(std::vector<UserSequence> sequences, Vocabulary vocabulary)
    : sequences_(std::move(sequences)), vocabulary_(std::move(vocabulary)) {
  const auto n_actions = static_cast<ActionIndex>(vocabulary_.size());
  attempts_.assign(vocabulary_.size(), 0);
  successes_.assign(vocabulary_.size(), 0);
  std::unordered_set<std::string> seen;
  seen.reserve(sequences_.size());
  for (const auto& seq : sequences_) {
    if (seq.actions.empty()) throw Error("user '" + seq.user_id + "' has an empty sequence");
    if (seq.actions.size() != seq.outcomes.size())
      throw Error("user '" + seq.user_id + "' has mismatched action/outcome lengths");
    if (!seen.insert(seq.user_id).second) throw Error("duplicate user id '" + seq.user_id + "'");
    for (std::size_t t = 0; t < seq.actions.size(); ++t) {
      const ActionIndex a = seq.actions[t];
      if (a < 0 || a >= n_actions) throw Error("action index out of range for user '" + seq.user_id + "'");
      if (seq.outcomes[t] > 1) throw Error("non-binary outcome for user '" + seq.user_id + "'");
      ++attempts_[a];
      successes_[a] += seq.outcomes[t];
    }
    size_ += seq.actions.size();
  }
}

std::vector<std::string> Corpus::user_ids() const {
  std::vector<std::string> ids;
  ids.reserve(sequences_.size());
  for (const auto& s : sequences_) ids.push_back(s.user_id);
  return ids;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

}  // namespace

Corpus read_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_fields(line);
    std::string_view first = f[0];
    if (first.substr(0, 3) == "\xEF\xBB\xBF") first.remove_prefix(3);
    if (f.size() != 3 || first != "user_id" || f[1] != "action_id" || f[2] != "outcome")
      throw LoadError("expected header 'user_id,action_id,outcome'", line_no);
    have_header = true;
    break;
  }
  if (!have_header) throw LoadError("empty dataset", 0);

  Vocabulary vocab;
  std::vector<UserSequence> sequences;
  std::unordered_map<std::string, std::size_t> user_slot;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 3) throw LoadError("expected 3 fields, got " + std::to_string(f.size()), line_no);
    if (f[0].empty() || f[1].empty()) throw LoadError("empty identifier", line_no);
    std::uint8_t outcome;
    if (f[2] == "0") {
      outcome = 0;
    } else if (f[2] == "1") {
      outcome = 1;
    } else {
      throw LoadError("outcome must be 0 or 1, got '" + std::string(f[2]) + "'", line_no);
    }
    auto [it, inserted] = user_slot.try_emplace(std::string(f[0]), sequences.size());
    if (inserted) sequences.push_back(UserSequence{std::string(f[0]), {}, {}});
    auto& seq = sequences[it->second];
    seq.actions.push_back(vocab.intern(f[1]));
    seq.outcomes.push_back(outcome);
  }
  if (sequences.empty()) throw LoadError("empty dataset", 0);
  return Corpus(std::move(sequences), std::move(vocab));
}

Corpus load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open '" + path.string() + "'", 0);
  return read_csv(in);
}

void write_csv(const Corpus& corpus, std::ostream& out) {
  out << "user_id,action_id,outcome\n";
  const auto& vocab = corpus.vocabulary();
  for (const auto& seq : corpus.sequences()) {
    for (std::size_t t = 0; t < seq.size(); ++t) {
      out << seq.user_id << ',' << vocab.name(seq.actions[t]) << ','
          << static_cast<int>(seq.outcomes[t]) << '\n';
    }
  }
}

void save_csv(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  write_csv(corpus, out);
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

Corpus filter_degenerate_actions(const Corpus& corpus) {
  if (corpus.empty()) throw Error("empty dataset");
  const auto& att = corpus.attempt_counts();
  const auto& suc = corpus.success_counts();
  const auto n = corpus.num_actions();

  std::vector<ActionIndex> remap(n, -1);
  Vocabulary vocab;
  for (std::size_t a = 0; a < n; ++a) {
    if (att[a] > 0 && suc[a] > 0 && suc[a] < att[a]) remap[a] = vocab.intern(corpus.vocabulary().name(static_cast<ActionIndex>(a)));
  }
  if (vocab.size() == 0) throw Error("no actions remain");

  std::vector<UserSequence> kept;
  for (const auto& seq : corpus.sequences()) {
    UserSequence out{seq.user_id, {}, {}};
    for (std::size_t t = 0; t < seq.size(); ++t) {
      const ActionIndex a = remap[seq.actions[t]];
      if (a < 0) continue;
      out.actions.push_back(a);
      out.outcomes.push_back(seq.outcomes[t]);
    }
    if (!out.actions.empty()) kept.push_back(std::move(out));
  }
  return Corpus(std::move(kept), std::move(vocab));
}

Corpus with_sorted_vocabulary(const Corpus& corpus) {
  std::vector<std::string> names;
  for (std::size_t a = 0; a < corpus.num_actions(); ++a)
    if (corpus.attempts(static_cast<ActionIndex>(a)) > 0) names.push_back(corpus.vocabulary().name(static_cast<ActionIndex>(a)));
  std::sort(names.begin(), names.end());
  Vocabulary vocab(names);
  std::vector<ActionIndex> remap(corpus.num_actions(), -1);
  for (std::size_t a = 0; a < corpus.num_actions(); ++a) {
    if (auto idx = vocab.find(corpus.vocabulary().name(static_cast<ActionIndex>(a)))) remap[a] = *idx;
  }
  std::vector<UserSequence> seqs = corpus.sequences();
  for (auto& s : seqs)
    for (auto& a : s.actions) a = remap[static_cast<std::size_t>(a)];
  return Corpus(std::move(seqs), std::move(vocab));
}

CorpusSplit split_half_users(const Corpus& corpus, std::uint64_t seed) {
  const auto n = corpus.num_users();
  if (n < 2) throw Error("split requires at least 2 users");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<char> in_training(n, 0);
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) in_training[order[i]] = 1;

  std::vector<UserSequence> training;
  std::vector<UserSequence> holdout;
  for (std::size_t u = 0; u < n; ++u) {
    (in_training[u] ? training : holdout).push_back(corpus.sequences()[u]);
  }
  return {Corpus(std::move(training), corpus.vocabulary()),
          Corpus(std::move(holdout), corpus.vocabulary())};
}

Corpus select_users(const Corpus& corpus, const std::vector<std::string>& user_ids) {
  std::unordered_set<std::string> wanted(user_ids.begin(), user_ids.end());
  std::vector<UserSequence> kept;
  for (const auto& seq : corpus.sequences()) {
    if (wanted.count(seq.user_id)) kept.push_back(seq);
  }
  return Corpus(std::move(kept), corpus.vocabulary());
}

std::size_t lower_median(std::vector<std::size_t> values) {
  if (values.empty()) throw Error("median of empty set");
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

std::vector<std::size_t> repeat_counts(const UserSequence& sequence) {
  std::unordered_map<ActionIndex, std::size_t> slot;
  std::vector<std::size_t> counts;
  for (ActionIndex a : sequence.actions) {
    auto [it, inserted] = slot.try_emplace(a, counts.size());
    if (inserted) counts.push_back(0);
    ++counts[it->second];
  }
  return counts;
}

CorpusStats compute_stats(const Corpus& corpus) {
  if (corpus.empty()) throw Error("empty dataset");
  CorpusStats st;
  st.size = corpus.size();
  st.users = corpus.num_users();
  st.actions = static_cast<std::size_t>(
      std::count_if(corpus.attempt_counts().begin(), corpus.attempt_counts().end(),
                    [](std::size_t c) { return c > 0; }));

  std::vector<std::size_t> lengths;
  std::vector<std::size_t> user_medians;
  lengths.reserve(st.users);
  user_medians.reserve(st.users);
  for (const auto& seq : corpus.sequences()) {
    lengths.push_back(seq.size());
    auto reps = repeat_counts(seq);
    st.repeat_max = std::max(st.repeat_max, *std::max_element(reps.begin(), reps.end()));
    user_medians.push_back(lower_median(std::move(reps)));
  }
  st.repeat_median = lower_median(std::move(user_medians));
  st.length_min = *std::min_element(lengths.begin(), lengths.end());
  st.length_max = *std::max_element(lengths.begin(), lengths.end());
  st.length_median = lower_median(std::move(lengths));
  return st;
}

}  // namespace edusynth
