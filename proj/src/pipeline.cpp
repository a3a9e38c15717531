// SPDX-License-Identifier: Apache-2.0
#include "edusynth/pipeline.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include "edusynth/drop.hpp"
#include "edusynth/gru.hpp"
#include "edusynth/markov.hpp"
#include "edusynth/rng.hpp"

namespace edusynth {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view key, std::string_view v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(std::string(v), &used);
    if (used != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw Error("invalid number '" + std::string(v) + "' for " + std::string(key));
  }
}

std::uint64_t parse_uint(std::string_view key, std::string_view v) {
  std::uint64_t x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw Error("invalid non-negative integer '" + std::string(v) + "' for " + std::string(key));
  return x;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw Error("invalid boolean '" + std::string(v) + "' for " + std::string(key));
}

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

std::string format_ratio(double r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", r);
  return buf;
}

}  // namespace

GeneratorSpec GeneratorSpec::parse(std::string_view text) {
  text = trim(text);
  GeneratorSpec g;
  if (text == "markov") {
    g.kind = Kind::markov;
  } else if (text == "rnn" || text == "gru") {
    g.kind = Kind::rnn;
  } else if (text.substr(0, 5) == "drop:") {
    g.kind = Kind::drop;
    g.drop_ratio = parse_double("drop ratio", text.substr(5));
    if (!(g.drop_ratio >= 0.0 && g.drop_ratio < 1.0)) throw Error("drop ratio must lie in [0, 1)");
  } else {
    throw Error("unknown generator '" + std::string(text) + "' (expected markov, rnn or drop:<ratio>)");
  }
  return g;
}

std::string GeneratorSpec::label() const {
  switch (kind) {
    case Kind::markov: return "markov";
    case Kind::rnn: return "rnn";
    case Kind::drop: return "drop:" + format_ratio(drop_ratio);
  }
  return "unknown";
}

std::vector<GeneratorSpec> parse_generator_list(std::string_view text) {
  std::vector<GeneratorSpec> out;
  while (!trim(text).empty()) {
    const auto comma = text.find(',');
    out.push_back(GeneratorSpec::parse(text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (out.empty()) throw Error("generator list is empty");
  return out;
}

void ExperimentConfig::set(std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  if (key == "dataset") dataset = std::string(value);
  else if (key == "generator") generator = GeneratorSpec::parse(value);
  else if (key == "seed") seed = parse_uint(key, value);
  else if (key == "reg_strength") reg_strength = parse_double(key, value);
  else if (key == "filter_degenerate") filter_degenerate = parse_bool(key, value);
  else if (key == "smoothing") smoothing = parse_double(key, value);
  else if (key == "length_cap") length_cap = parse_uint(key, value);
  else if (key == "hidden_size") hidden_size = parse_uint(key, value);
  else if (key == "batch_size") batch_size = parse_uint(key, value);
  else if (key == "epochs") epochs = parse_uint(key, value);
  else if (key == "lr") learning_rate = parse_double(key, value);
  else if (key == "temperature") temperature = parse_double(key, value);
  else if (key == "max_len") max_len = parse_uint(key, value);
  else if (key == "n_fake") n_fake = parse_uint(key, value);
  else if (key == "include_outcomes") include_outcomes = parse_bool(key, value);
  else if (key == "include_scores") include_scores = parse_bool(key, value);
  else if (key == "artifacts_dir") artifacts_dir = std::string(value);
  else throw Error("unknown config key '" + std::string(key) + "'");
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view t = line;
    t = trim(t.substr(0, t.find('#')));
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) throw LoadError("expected 'key = value'", line_no);
    try {
      c.set(t.substr(0, eq), t.substr(eq + 1));
    } catch (const LoadError&) {
      throw;
    } catch (const Error& e) {
      throw LoadError(e.what(), line_no);
    }
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path.string() + "'");
  return parse_config(in);
}

ArtifactSink::ArtifactSink(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::filesystem::path ArtifactSink::claim(const std::string& name) {
  std::filesystem::create_directories(dir_);
  auto path = dir_ / name;
  written_.push_back(path);
  return path;
}

void ArtifactSink::save(const std::string& name, const Corpus& corpus) { save_csv(corpus, claim(name)); }
void ArtifactSink::save(const std::string& name, const Json& json) { write_json(json, claim(name)); }
void ArtifactSink::save_lines(const std::string& name, const std::vector<std::string>& lines) {
  write_lines(lines, claim(name));
}

void ArtifactSink::rollback() noexcept {
  for (const auto& p : written_) {
    std::error_code ec;
    std::filesystem::remove(p, ec);
  }
  written_.clear();
}

PreparedData prepare(const ExperimentConfig& config, ArtifactSink* sink) {
  Corpus loaded = stage("load", [&] { return load_csv(config.dataset); });
  return prepare(loaded, config, sink);
}

PreparedData prepare(const Corpus& original, const ExperimentConfig& config, ArtifactSink* sink) {
  PreparedData d;
  d.original = config.filter_degenerate ? stage("filter", [&] { return filter_degenerate_actions(original); }) : original;
  d.stats = stage("stats", [&] { return compute_stats(d.original); });
  stage("split", [&] {
    auto split = split_half_users(d.original, stage_seed(config.seed, "split"));
    d.training = std::move(split.training);
    d.holdout = std::move(split.holdout);
    d.training_users = d.training.user_ids();
    return 0;
  });
  stage("fit-irt", [&] {
    IrtFitOptions opts;
    opts.reg_strength = config.reg_strength;
    d.training_fit = fit_irt(d.training, opts);
    d.prior = fit_prior(d.training_fit);
    return 0;
  });
  if (sink) {
    stage("persist", [&] {
      sink->save("original.csv", d.original);
      sink->save("training.csv", d.training);
      sink->save("holdout.csv", d.holdout);
      sink->save_lines("training_users.txt", d.training_users);
      sink->save("irt_training.json", to_json(d.training_fit));
      sink->save("prior.json", to_json(d.prior));
      return 0;
    });
  }
  return d;
}

Corpus generate_fake(const PreparedData& data, const ExperimentConfig& config, const GeneratorSpec& generator,
                     ArtifactSink* sink) {
  const std::size_t n_fake = config.n_fake.value_or(data.training.num_users());
  auto with_outcomes = [&](const Vocabulary& vocab, const std::vector<std::vector<ActionIndex>>& seqs) {
    return stage("generate-outcomes", [&] {
      auto users = generate_outcomes(data.training_fit, data.prior, vocab, seqs, stage_seed(config.seed, "outcomes"));
      return Corpus(std::move(users), vocab);
    });
  };

  switch (generator.kind) {
    case GeneratorSpec::Kind::drop:
      return stage("drop", [&] {
        return drop_and_renumber(data.training, generator.drop_ratio, stage_seed(config.seed, "drop"));
      });
    case GeneratorSpec::Kind::markov: {
      auto model = stage("fit-markov", [&] {
        return fit_markov(data.training, MarkovFitOptions{config.smoothing, config.length_cap});
      });
      if (sink) stage("persist", [&] { sink->save("markov.json", to_json(model)); return 0; });
      auto seqs = stage("sample-markov", [&] { return sample_markov(model, n_fake, stage_seed(config.seed, "markov-sample")); });
      return with_outcomes(model.vocabulary(), seqs);
    }
    case GeneratorSpec::Kind::rnn: {
      auto model = stage("train-gru", [&] {
        GruTrainOptions opts;
        opts.hidden_size = config.hidden_size;
        opts.batch_size = config.batch_size;
        opts.epochs = config.epochs;
        opts.learning_rate = config.learning_rate;
        opts.seed = stage_seed(config.seed, "gru-train");
        return train_gru(data.training, opts);
      });
      if (sink) stage("persist", [&] { sink->save("gru.json", to_json(model)); return 0; });
      auto seqs = stage("sample-gru", [&] {
        return sample_gru(model, n_fake, config.max_len, config.temperature, stage_seed(config.seed, "gru-sample"));
      });
      return with_outcomes(model.vocabulary(), seqs);
    }
  }
  throw StageError("generate", "unknown generator");
}

ExperimentResult evaluate_generator(const PreparedData& data, const ExperimentConfig& config,
                                    const GeneratorSpec& generator, ArtifactSink* sink) {
  ExperimentResult r;
  r.generator = generator;
  r.fake = generate_fake(data, config, generator, sink);
  r.fake_fit = stage("fit-irt-fake", [&] {
    IrtFitOptions opts;
    opts.reg_strength = config.reg_strength;
    return fit_irt(r.fake, opts);
  });
  r.utility = stage("utility", [&] { return evaluate_utility(data.training, data.training_fit, r.fake, r.fake_fit); });
  r.audit = stage("audit", [&] {
    return reid_audit(data.original, data.training_users, r.fake, MatchOptions{config.include_outcomes});
  });
  if (sink) {
    stage("persist", [&] {
      sink->save("fake.csv", r.fake);
      sink->save("irt_fake.json", to_json(r.fake_fit));
      return 0;
    });
  }
  return r;
}

Json experiment_report(const PreparedData& data, const ExperimentConfig& config, const ExperimentResult& result) {
  Json seeds = Json::object();
  for (auto name : kSeedStages) seeds[std::string(name)] = stage_seed(config.seed, name);
  Json cfg{{"dataset", config.dataset.string()},
           {"generator", result.generator.label()},
           {"seed", config.seed},
           {"reg_strength", config.reg_strength},
           {"filter_degenerate", config.filter_degenerate},
           {"smoothing", config.smoothing},
           {"length_cap", config.length_cap},
           {"hidden_size", config.hidden_size},
           {"batch_size", config.batch_size},
           {"epochs", config.epochs},
           {"lr", config.learning_rate},
           {"temperature", config.temperature},
           {"max_len", config.max_len},
           {"n_fake", config.n_fake.value_or(data.training.num_users())},
           {"include_outcomes", config.include_outcomes}};
  return Json{{"config", cfg},
              {"stage_seeds", seeds},
              {"stats", to_json(data.stats)},
              {"split", {{"training_users", data.training.num_users()}, {"holdout_users", data.holdout.num_users()}}},
              {"prior", to_json(data.prior)},
              {"fake", {{"users", result.fake.num_users()}, {"size", result.fake.size()}}},
              {"utility", to_json(result.utility)},
              {"audit", to_json(result.audit, config.include_scores)}};
}

Json run_experiment(const ExperimentConfig& config) {
  std::optional<ArtifactSink> sink;
  if (!config.artifacts_dir.empty()) sink.emplace(config.artifacts_dir);
  ArtifactSink* s = sink ? &*sink : nullptr;
  try {
    const PreparedData data = prepare(config, s);
    const ExperimentResult result = evaluate_generator(data, config, config.generator, s);
    Json report = experiment_report(data, config, result);
    if (s) s->save("report.json", report);
    return report;
  } catch (...) {
    if (s) s->rollback();
    throw;
  }
}

std::vector<SweepRow> sweep(const PreparedData& data, const ExperimentConfig& config,
                            const std::vector<GeneratorSpec>& generators) {
  if (generators.empty()) throw Error("sweep needs at least one generator");
  std::vector<SweepRow> rows;
  for (const auto& g : generators) {
    SweepRow row;
    row.generator = g.label();
    try {
      const auto r = evaluate_generator(data, config, g);
      row.ok = true;
      row.rmse = r.utility.rmse;
      row.wrmse = r.utility.wrmse;
      row.auc = r.audit.auc;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<SweepRow> sweep(const ExperimentConfig& config, const std::vector<GeneratorSpec>& generators) {
  if (generators.empty()) throw Error("sweep needs at least one generator");
  return sweep(prepare(config), config, generators);
}

namespace {

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

std::string csv_escape(std::string s) {
  for (auto& c : s)
    if (c == ',' || c == '\n') c = ';';
  return s;
}

}  // namespace

void write_sweep_rows(const std::vector<SweepRow>& rows, std::ostream& out) {
  out << "generator,rmse,wrmse,auc,status\n";
  for (const auto& r : rows) {
    if (r.ok) {
      out << r.generator << ',' << num(r.rmse) << ',' << num(r.wrmse) << ',' << num(r.auc) << ",ok\n";
    } else {
      out << r.generator << ",,,,error: " << csv_escape(r.error) << '\n';
    }
  }
}

void write_sweep_table(const std::vector<SweepRow>& rows, std::ostream& out) {
  out << "metric";
  for (const auto& r : rows) out << ',' << r.generator;
  out << '\n';
  auto line = [&](const char* name, double SweepRow::*field) {
    out << name;
    for (const auto& r : rows) out << ',' << (r.ok ? num(r.*field) : std::string("NA"));
    out << '\n';
  };
  line("RMSE", &SweepRow::rmse);
  line("wRMSE", &SweepRow::wrmse);
  line("Re-ID AUC", &SweepRow::auc);
}

void write_sweep_scatter(const std::vector<SweepRow>& rows, std::ostream& out) {
  out << "generator,wrmse,auc\n";
  for (const auto& r : rows)
    if (r.ok) out << r.generator << ',' << num(r.wrmse) << ',' << num(r.auc) << '\n';
}

}  // namespace edusynth
