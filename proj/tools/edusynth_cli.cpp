// SPDX-License-Identifier: Apache-2.0
//
// edusynth command-line interface. Every --seed is a master seed; each
// command derives its stage seed from it exactly as `run` does, so chaining
// the stage commands reproduces a `run` with the same seed.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "edusynth/corpus.hpp"
#include "edusynth/drop.hpp"
#include "edusynth/gru.hpp"
#include "edusynth/irt.hpp"
#include "edusynth/markov.hpp"
#include "edusynth/pipeline.hpp"
#include "edusynth/privacy.hpp"
#include "edusynth/rng.hpp"
#include "edusynth/serialize.hpp"
#include "edusynth/synthetic.hpp"
#include "edusynth/utility.hpp"

namespace fs = std::filesystem;
using namespace edusynth;

namespace {

// Writes through a temporary file so a failed command leaves nothing behind.
template <class F>
void write_atomically(const fs::path& path, F&& write) {
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  try {
    {
      std::ofstream out(tmp);
      if (!out) throw Error("cannot write '" + path.string() + "'");
      write(out);
      if (!out) throw Error("write failed for '" + path.string() + "'");
    }
    fs::rename(tmp, path);
  } catch (...) {
    std::error_code ec;
    fs::remove(tmp, ec);
    throw;
  }
}

void emit_json(const Json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  write_atomically(path, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

void emit_corpus(const Corpus& c, const std::string& path) {
  write_atomically(path, [&](std::ostream& out) { write_csv(c, out); });
}

std::string with_suffix(const fs::path& base, const std::string& suffix) {
  return (base.parent_path() / (base.stem().string() + suffix + base.extension().string())).string();
}

// Flags shared by `run` and `sweep`; every one overrides a config key.
struct ExperimentFlags {
  std::string config;
  std::vector<std::pair<std::string, std::string>> overrides;
  std::string dataset, generator, seed, reg, smoothing, length_cap, hidden_size, batch_size, epochs, lr, temperature,
      max_len, n_fake, artifacts_dir, include_outcomes, filter_degenerate, include_scores;

  void attach(CLI::App* app, bool with_generator) {
    app->add_option("--config", config, "flat key = value config file");
    app->add_option("--dataset", dataset, "CSV with user_id,action_id,outcome");
    if (with_generator) app->add_option("--generator", generator, "markov | rnn | drop:<ratio>");
    app->add_option("--seed", seed, "master seed");
    app->add_option("--reg", reg, "IRT regularization strength C");
    app->add_option("--smoothing", smoothing, "Markov additive smoothing");
    app->add_option("--length-cap", length_cap, "Markov length cap");
    app->add_option("--hidden-size", hidden_size, "GRU hidden size");
    app->add_option("--batch-size", batch_size, "GRU batch size");
    app->add_option("--epochs", epochs, "GRU epochs");
    app->add_option("--lr", lr, "GRU learning rate");
    app->add_option("--temperature", temperature, "GRU sampling temperature");
    app->add_option("--max-len", max_len, "GRU maximum sampled length");
    app->add_option("--n-fake", n_fake, "number of fake users (default: training users)");
    app->add_option("--artifacts-dir", artifacts_dir, "persist intermediate artifacts here");
    app->add_option("--include-outcomes", include_outcomes, "match (action, outcome) pairs: true/false");
    app->add_option("--filter-degenerate", filter_degenerate, "drop 0%/100% success actions: true/false");
    app->add_option("--include-scores", include_scores, "per-user scores in the report: true/false");
  }

  ExperimentConfig resolve() const {
    ExperimentConfig c = config.empty() ? ExperimentConfig{} : load_config(config);
    auto put = [&](const char* key, const std::string& v) {
      if (!v.empty()) c.set(key, v);
    };
    put("dataset", dataset);
    put("generator", generator);
    put("seed", seed);
    put("reg_strength", reg);
    put("smoothing", smoothing);
    put("length_cap", length_cap);
    put("hidden_size", hidden_size);
    put("batch_size", batch_size);
    put("epochs", epochs);
    put("lr", lr);
    put("temperature", temperature);
    put("max_len", max_len);
    put("n_fake", n_fake);
    put("artifacts_dir", artifacts_dir);
    put("include_outcomes", include_outcomes);
    put("filter_degenerate", filter_degenerate);
    put("include_scores", include_scores);
    if (c.dataset.empty()) throw Error("no dataset given (--dataset or 'dataset' config key)");
    return c;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic interaction-log generation and privacy/utility audit"};
  app.require_subcommand(1);

  // ingest
  std::string in_path, out_path;
  bool no_filter = false;
  auto* ingest = app.add_subcommand("ingest", "validate a CSV and drop degenerate actions");
  ingest->add_option("--input", in_path)->required();
  ingest->add_option("--output", out_path)->required();
  ingest->add_flag("--no-filter", no_filter, "keep 0%/100% success actions");

  // stats
  auto* stats = app.add_subcommand("stats", "dataset statistics as JSON");
  stats->add_option("--input", in_path)->required();
  stats->add_option("--output", out_path, "JSON output (stdout if omitted)");

  // split
  std::uint64_t seed = 0;
  std::string training_path, holdout_path, users_path;
  auto* split = app.add_subcommand("split", "random half-user split");
  split->add_option("--input", in_path)->required();
  split->add_option("--seed", seed);
  split->add_option("--training", training_path)->required();
  split->add_option("--holdout", holdout_path)->required();
  split->add_option("--training-users", users_path, "one training user id per line");

  // fit-irt
  double reg = 1.0;
  std::string prior_path;
  auto* fit_irt_cmd = app.add_subcommand("fit-irt", "fit the Rasch model (and ability prior)");
  fit_irt_cmd->add_option("--input", in_path)->required();
  fit_irt_cmd->add_option("--reg", reg, "regularization strength C")->capture_default_str();
  fit_irt_cmd->add_option("--output", out_path)->required();
  fit_irt_cmd->add_option("--prior", prior_path, "also write the Gaussian ability prior");

  // fit-markov
  double smoothing = 0.0;
  std::size_t length_cap = 1000;
  auto* fit_markov_cmd = app.add_subcommand("fit-markov", "estimate the action Markov chain");
  fit_markov_cmd->add_option("--input", in_path)->required();
  fit_markov_cmd->add_option("--smoothing", smoothing)->capture_default_str();
  fit_markov_cmd->add_option("--length-cap", length_cap)->capture_default_str();
  fit_markov_cmd->add_option("--output", out_path)->required();

  // train-gru
  GruTrainOptions gru_opts;
  bool verbose = false;
  auto* train_cmd = app.add_subcommand("train-gru", "train the GRU next-action model");
  train_cmd->add_option("--input", in_path)->required();
  train_cmd->add_option("--hidden-size", gru_opts.hidden_size)->capture_default_str();
  train_cmd->add_option("--batch-size", gru_opts.batch_size)->capture_default_str();
  train_cmd->add_option("--epochs", gru_opts.epochs)->capture_default_str();
  train_cmd->add_option("--lr", gru_opts.learning_rate)->capture_default_str();
  train_cmd->add_option("--seed", seed);
  train_cmd->add_option("--output", out_path)->required();
  train_cmd->add_flag("--verbose", verbose, "print per-epoch loss");

  // generate
  std::string generator_kind = "markov", model_path, irt_path;
  std::size_t n_sequences = 0, max_len = 1000;
  double temperature = 1.0;
  auto* generate = app.add_subcommand("generate", "sample a fake dataset");
  generate->add_option("--generator", generator_kind, "markov | rnn")->capture_default_str();
  generate->add_option("--model", model_path, "markov.json or gru.json")->required();
  generate->add_option("--irt", irt_path, "IRT model fitted on the training set")->required();
  generate->add_option("--prior", prior_path, "ability prior (fitted from --irt if omitted)");
  generate->add_option("--n", n_sequences, "number of fake users")->required();
  generate->add_option("--seed", seed);
  generate->add_option("--temperature", temperature)->capture_default_str();
  generate->add_option("--max-len", max_len)->capture_default_str();
  generate->add_option("--output", out_path)->required();

  // drop
  std::vector<double> ratios;
  auto* drop = app.add_subcommand("drop", "drop rows and renumber users");
  drop->add_option("--input", in_path)->required();
  drop->add_option("--drop-ratio", ratios, "repeatable; one output per ratio")->required();
  drop->add_option("--seed", seed);
  drop->add_option("--output", out_path, "output CSV; with several ratios '_<ratio>' is appended")->required();

  // audit
  std::string original_path, fake_path;
  bool include_outcomes = false, no_scores = false;
  auto* audit = app.add_subcommand("audit", "membership-inference audit");
  audit->add_option("--original", original_path)->required();
  audit->add_option("--training-users", users_path)->required();
  audit->add_option("--fake", fake_path)->required();
  audit->add_flag("--include-outcomes", include_outcomes, "match (action, outcome) pairs");
  audit->add_flag("--no-scores", no_scores, "omit per-user scores");
  audit->add_option("--output", out_path, "JSON output (stdout if omitted)");

  // utility
  std::string hist_dir;
  auto* utility = app.add_subcommand("utility", "difficulty RMSE and histogram distances");
  utility->add_option("--training", training_path)->required();
  utility->add_option("--fake", fake_path)->required();
  utility->add_option("--reg", reg)->capture_default_str();
  utility->add_option("--output", out_path, "JSON output (stdout if omitted)");
  utility->add_option("--hist-dir", hist_dir, "write key,count histogram tables here");

  // run
  ExperimentFlags run_flags;
  auto* run = app.add_subcommand("run", "full experiment, one JSON report");
  run_flags.attach(run, true);
  run->add_option("--output", out_path, "JSON report (stdout if omitted)");

  // sweep
  ExperimentFlags sweep_flags;
  std::string generators, table_path, scatter_path;
  auto* sweep_cmd = app.add_subcommand("sweep", "several generators on one split");
  sweep_flags.attach(sweep_cmd, false);
  sweep_cmd->add_option("--generators", generators, "comma-separated, e.g. drop:0,drop:0.5,markov")->required();
  sweep_cmd->add_option("--output", out_path, "rows: generator,rmse,wrmse,auc,status")->required();
  sweep_cmd->add_option("--table", table_path, "metric x generator table");
  sweep_cmd->add_option("--scatter", scatter_path, "generator,wrmse,auc");

  // make-synthetic
  SyntheticConfig syn;
  std::string truth_path;
  auto* make_syn = app.add_subcommand("make-synthetic", "ground-truth corpus from known Markov + IRT parameters");
  make_syn->add_option("--users", syn.users)->capture_default_str();
  make_syn->add_option("--actions", syn.actions)->capture_default_str();
  make_syn->add_option("--min-length", syn.min_length)->capture_default_str();
  make_syn->add_option("--mean-length", syn.mean_length)->capture_default_str();
  make_syn->add_option("--concentration", syn.concentration)->capture_default_str();
  make_syn->add_option("--seed", syn.seed);
  make_syn->add_option("--output", out_path)->required();
  make_syn->add_option("--truth", truth_path, "JSON with the true theta and d");

  CLI11_PARSE(app, argc, argv);

  try {
    if (ingest->parsed()) {
      Corpus c = load_csv(in_path);
      if (!no_filter) c = filter_degenerate_actions(c);
      emit_corpus(c, out_path);
    } else if (stats->parsed()) {
      emit_json(to_json(compute_stats(load_csv(in_path))), out_path);
    } else if (split->parsed()) {
      const auto parts = split_half_users(load_csv(in_path), stage_seed(seed, "split"));
      emit_corpus(parts.training, training_path);
      emit_corpus(parts.holdout, holdout_path);
      if (!users_path.empty()) {
        write_atomically(users_path, [&](std::ostream& out) {
          for (const auto& id : parts.training.user_ids()) out << id << '\n';
        });
      }
    } else if (fit_irt_cmd->parsed()) {
      IrtFitOptions opts;
      opts.reg_strength = reg;
      const auto model = fit_irt(load_csv(in_path), opts);
      emit_json(to_json(model), out_path);
      if (!prior_path.empty()) emit_json(to_json(fit_prior(model)), prior_path);
    } else if (fit_markov_cmd->parsed()) {
      emit_json(to_json(fit_markov(load_csv(in_path), {smoothing, length_cap})), out_path);
    } else if (train_cmd->parsed()) {
      gru_opts.seed = stage_seed(seed, "gru-train");
      if (verbose) {
        gru_opts.on_epoch = [](std::size_t e, double loss) { std::cerr << "epoch " << e << " loss " << loss << '\n'; };
      }
      GruTrainReport rep;
      const auto model = train_gru(load_csv(in_path), gru_opts, &rep);
      if (verbose) std::cerr << "initial loss " << rep.initial_loss << ", final loss " << rep.final_loss << '\n';
      emit_json(to_json(model), out_path);
    } else if (generate->parsed()) {
      const auto irt = irt_from_json(read_json(irt_path));
      const auto prior = prior_path.empty() ? fit_prior(irt) : prior_from_json(read_json(prior_path));
      std::vector<std::vector<ActionIndex>> seqs;
      Vocabulary vocab;
      if (generator_kind == "markov") {
        const auto model = markov_from_json(read_json(model_path));
        vocab = model.vocabulary();
        seqs = sample_markov(model, n_sequences, stage_seed(seed, "markov-sample"));
      } else if (generator_kind == "rnn" || generator_kind == "gru") {
        const auto model = gru_from_json(read_json(model_path));
        vocab = model.vocabulary();
        seqs = sample_gru(model, n_sequences, max_len, temperature, stage_seed(seed, "gru-sample"));
      } else {
        throw Error("unknown generator '" + generator_kind + "'");
      }
      auto users = generate_outcomes(irt, prior, vocab, seqs, stage_seed(seed, "outcomes"));
      emit_corpus(Corpus(std::move(users), vocab), out_path);
    } else if (drop->parsed()) {
      const auto training = load_csv(in_path);
      for (double r : ratios) {
        const auto out = drop_and_renumber(training, r, stage_seed(seed, "drop"));
        emit_corpus(out, ratios.size() == 1 ? out_path : with_suffix(out_path, "_" + GeneratorSpec{GeneratorSpec::Kind::drop, r}.label().substr(5)));
      }
    } else if (audit->parsed()) {
      const auto report = reid_audit(load_csv(original_path), read_lines(users_path), load_csv(fake_path),
                                     MatchOptions{include_outcomes});
      emit_json(to_json(report, !no_scores), out_path);
    } else if (utility->parsed()) {
      const auto training = load_csv(training_path);
      const auto fake = load_csv(fake_path);
      IrtFitOptions opts;
      opts.reg_strength = reg;
      const auto report = evaluate_utility(training, fit_irt(training, opts), fake, fit_irt(fake, opts));
      if (!hist_dir.empty()) {
        write_histograms(histograms(training), hist_dir, "training_");
        write_histograms(histograms(fake), hist_dir, "fake_");
      }
      emit_json(to_json(report), out_path);
    } else if (run->parsed()) {
      emit_json(run_experiment(run_flags.resolve()), out_path);
    } else if (sweep_cmd->parsed()) {
      const auto rows = sweep(sweep_flags.resolve(), parse_generator_list(generators));
      write_atomically(out_path, [&](std::ostream& out) { write_sweep_rows(rows, out); });
      if (!table_path.empty()) write_atomically(table_path, [&](std::ostream& out) { write_sweep_table(rows, out); });
      if (!scatter_path.empty())
        write_atomically(scatter_path, [&](std::ostream& out) { write_sweep_scatter(rows, out); });
      for (const auto& r : rows)
        if (!r.ok) std::cerr << "warning: generator " << r.generator << " failed: " << r.error << '\n';
    } else if (make_syn->parsed()) {
      const auto data = make_synthetic(syn);
      emit_corpus(data.corpus, out_path);
      if (!truth_path.empty()) emit_json(Json{{"theta", data.theta}, {"d", data.difficulty}}, truth_path);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
