// SPDX-License-Identifier: Apache-2.0
//
// JSON and tabular text formats for models and reports.
#pragma once

#include <filesystem>
#include <iosfwd>
#include "json.hpp"
#include <string>
#include <vector>

#include "edusynth/corpus.hpp"
#include "edusynth/gru.hpp"
#include "edusynth/irt.hpp"
#include "edusynth/markov.hpp"
#include "edusynth/privacy.hpp"
#include "edusynth/utility.hpp"

namespace edusynth {

using Json = nlohmann::json;

inline constexpr const char* kStopKey = "<STOP>";

Json to_json(const CorpusStats& stats);

/// {reg_strength, theta: {user: value}, d: {action: value}}
Json to_json(const IrtModel& model);
IrtModel irt_from_json(const Json& j);

/// {mu, sigma}
Json to_json(const AbilityPrior& prior);
AbilityPrior prior_from_json(const Json& j);

/// {start: {action: p}, trans: {state: {state or "<STOP>": p}}, length_cap}.
/// Zero probabilities are omitted. `actions` lists the full vocabulary in
/// model order.
Json to_json(const MarkovModel& model);
MarkovModel markov_from_json(const Json& j);

/// Versioned tensor dump {format, version, vocabulary, dims, hyper, tensors}.
Json to_json(const GruModel& model);
GruModel gru_from_json(const Json& j);

/// {auc, p, entropy_threshold, filtered_fraction, scores: [{user, score, label}]}
Json to_json(const AuditReport& report, bool include_scores = true);

/// {rmse, wrmse, excluded_weight, tv_action_hist, tv_length_hist}
Json to_json(const UtilityReport& report);

Json read_json(const std::filesystem::path& path);
/// Writes `j` with two-space indentation and a trailing newline.
void write_json(const Json& j, const std::filesystem::path& path);

/// "key,count" tables, one row per entry.
void write_histogram(const std::vector<std::pair<std::string, std::size_t>>& rows, std::ostream& out);
void write_histogram(const CountHistogram& hist, std::ostream& out);
/// actions.csv, lengths.csv and repeats.csv under `dir`, each file name
/// prefixed with `prefix`.
void write_histograms(const HistogramBundle& h, const std::filesystem::path& dir, const std::string& prefix);

std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_lines(const std::vector<std::string>& lines, const std::filesystem::path& path);

}  // namespace edusynth
