// SPDX-License-Identifier: Apache-2.0
//
// End-to-end experiment: original -> half-user training split -> generator
// -> fake set, IRT fitted on both sides for utility, and a membership
// inference audit of the fake set against the original population.
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "edusynth/corpus.hpp"
#include "edusynth/error.hpp"
#include "edusynth/irt.hpp"
#include "edusynth/privacy.hpp"
#include "edusynth/serialize.hpp"
#include "edusynth/utility.hpp"

namespace edusynth {

/// Error raised inside a pipeline stage; what() starts with the stage name.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("stage '" + stage + "': " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

struct GeneratorSpec {
  enum class Kind { markov, rnn, drop };
  Kind kind = Kind::markov;
  double drop_ratio = 0.0;

  /// "markov", "rnn" (alias "gru") or "drop:<ratio>".
  static GeneratorSpec parse(std::string_view text);
  std::string label() const;
};

std::vector<GeneratorSpec> parse_generator_list(std::string_view comma_separated);

struct ExperimentConfig {
  std::filesystem::path dataset;
  GeneratorSpec generator;
  std::uint64_t seed = 0;
  double reg_strength = 1.0;
  bool filter_degenerate = true;
  // Markov chain
  double smoothing = 0.0;
  std::size_t length_cap = 1000;
  // GRU
  std::size_t hidden_size = 64;
  std::size_t batch_size = 64;
  std::size_t epochs = 20;
  double learning_rate = 1e-3;
  double temperature = 1.0;
  std::size_t max_len = 1000;
  /// Fake users to generate; defaults to the number of training users.
  std::optional<std::size_t> n_fake;
  bool include_outcomes = false;
  bool include_scores = true;
  /// When set, every intermediate artifact is written here.
  std::filesystem::path artifacts_dir;

  /// Sets one key of the flat key/value format (see parse_config).
  void set(std::string_view key, std::string_view value);
};

/// `key = value` lines; blank lines and lines starting with '#' ignored.
/// Keys: dataset, generator, seed, reg_strength, filter_degenerate,
/// smoothing, length_cap, hidden_size, batch_size, epochs, lr, temperature,
/// max_len, n_fake, include_outcomes, include_scores, artifacts_dir.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Stage names used for seed derivation, in pipeline order.
inline constexpr std::string_view kSeedStages[] = {"split", "markov-sample", "gru-train", "gru-sample", "drop",
                                                   "outcomes"};

/// Records files written during a run so a failed run can remove them.
class ArtifactSink {
 public:
  explicit ArtifactSink(std::filesystem::path dir);

  void save(const std::string& name, const Corpus& corpus);
  void save(const std::string& name, const Json& json);
  void save_lines(const std::string& name, const std::vector<std::string>& lines);
  /// Deletes every file written so far.
  void rollback() noexcept;
  const std::vector<std::filesystem::path>& written() const noexcept { return written_; }

 private:
  std::filesystem::path claim(const std::string& name);

  std::filesystem::path dir_;
  std::vector<std::filesystem::path> written_;
};

/// Shared part of every experiment on one dataset and seed.
struct PreparedData {
  Corpus original;
  CorpusStats stats;
  Corpus training;
  Corpus holdout;
  std::vector<std::string> training_users;
  IrtModel training_fit;
  AbilityPrior prior;
};

/// load -> (filter) -> stats -> split -> IRT + prior on the training half.
PreparedData prepare(const ExperimentConfig& config, ArtifactSink* sink = nullptr);
/// Same, starting from an in-memory corpus (filtered when configured).
PreparedData prepare(const Corpus& original, const ExperimentConfig& config, ArtifactSink* sink = nullptr);

Corpus generate_fake(const PreparedData& data, const ExperimentConfig& config, const GeneratorSpec& generator,
                     ArtifactSink* sink = nullptr);

struct ExperimentResult {
  GeneratorSpec generator;
  Corpus fake;
  IrtModel fake_fit;
  UtilityReport utility;
  AuditReport audit;
};

ExperimentResult evaluate_generator(const PreparedData& data, const ExperimentConfig& config,
                                    const GeneratorSpec& generator, ArtifactSink* sink = nullptr);

Json experiment_report(const PreparedData& data, const ExperimentConfig& config, const ExperimentResult& result);

/// Full run; returns the JSON report. On failure every artifact written by
/// this run is removed and a StageError is thrown.
Json run_experiment(const ExperimentConfig& config);

struct SweepRow {
  std::string generator;
  bool ok = false;
  std::string error;
  double rmse = 0.0;
  double wrmse = 0.0;
  double auc = 0.0;
};

/// One shared split, one row per generator; failed rows are recorded and the
/// sweep continues. Throws for an empty generator list.
std::vector<SweepRow> sweep(const ExperimentConfig& config, const std::vector<GeneratorSpec>& generators);
std::vector<SweepRow> sweep(const PreparedData& data, const ExperimentConfig& config,
                            const std::vector<GeneratorSpec>& generators);

/// generator,rmse,wrmse,auc,status
void write_sweep_rows(const std::vector<SweepRow>& rows, std::ostream& out);
/// metric,<generator>... with rows RMSE, wRMSE, Re-ID AUC.
void write_sweep_table(const std::vector<SweepRow>& rows, std::ostream& out);
/// generator,wrmse,auc for successful rows.
void write_sweep_scatter(const std::vector<SweepRow>& rows, std::ostream& out);

}  // namespace edusynth
