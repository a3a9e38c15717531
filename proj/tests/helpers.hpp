// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <initializer_list>
#include <unistd.h>
#include <sstream>
#include <string>
#include <vector>

#include "edusynth/corpus.hpp"

namespace testing {

// Builds a corpus from "user,action,outcome" lines (header added here).
inline edusynth::Corpus corpus_from(std::initializer_list<const char*> rows) {
  std::stringstream ss;
  ss << "user_id,action_id,outcome\n";
  for (const char* r : rows) ss << r << '\n';
  return edusynth::read_csv(ss);
}

// Action-only corpus: each string is a user's action sequence, one char per action.
// Outcomes alternate 1,0 so no action is degenerate when it appears twice.
inline edusynth::Corpus corpus_of_strings(const std::vector<std::string>& seqs) {
  std::stringstream ss;
  ss << "user_id,action_id,outcome\n";
  for (std::size_t u = 0; u < seqs.size(); ++u) {
    for (std::size_t t = 0; t < seqs[u].size(); ++t)
      ss << "u" << u << ',' << seqs[u][t] << ',' << ((u + t) % 2) << '\n';
  }
  return edusynth::read_csv(ss);
}

inline std::string corpus_csv(const edusynth::Corpus& c) {
  std::stringstream ss;
  edusynth::write_csv(c, ss);
  return ss.str();
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("edusynth_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
