// SPDX-License-Identifier: Apache-2.0
//
// Acceptance gate. Prints one PASS / FAIL / SKIP line per criterion and exits
// non-zero if any criterion fails. Every tolerance and limit lives in `limits`.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "edusynth/drop.hpp"
#include "edusynth/gru.hpp"
#include "edusynth/irt.hpp"
#include "edusynth/markov.hpp"
#include "edusynth/pipeline.hpp"
#include "edusynth/privacy.hpp"
#include "edusynth/synthetic.hpp"
#include "edusynth/utility.hpp"
#include "oracles.hpp"

using namespace edusynth;

namespace limits {
constexpr int lcs_trials = 200;
constexpr std::size_t lcs_max_len = 12;
constexpr int lcs_alphabet = 4;
constexpr double lcs_seconds = 5.0;

constexpr int auc_trials = 100;
constexpr std::size_t auc_max_n = 50;

constexpr double irt_fd_rel = 1e-5;
constexpr double irt_fd_step = 1e-5;
constexpr int irt_restarts = 5;
constexpr double irt_restart_objective = 1e-6;

constexpr double gru_fd_rel = 1e-4;
constexpr double gru_fd_step = 1e-5;
constexpr std::size_t gru_vocab = 5, gru_hidden = 4, gru_length = 6;

constexpr std::size_t synth_users = 500, synth_actions = 50;
constexpr double recovery_wrmse = 0.25;
constexpr double recovery_pearson = 0.9;
constexpr double recovery_seconds = 120.0;

constexpr std::size_t privacy_median_length = 50;
constexpr double drop0_auc = 0.9;
constexpr double markov_auc_lo = 0.45, markov_auc_hi = 0.55;
constexpr double privacy_seconds = 300.0;

constexpr std::size_t markov_actions = 1'000'000;
constexpr double markov_seconds = 10.0;
constexpr std::size_t lcs_audit_users = 1000, lcs_audit_length = 100;
constexpr double lcs_audit_seconds = 60.0;

constexpr std::size_t full_rows_k = 279, full_users = 4163, full_actions = 112;
constexpr double full_drop0_auc = 0.913, full_markov_wrmse = 0.065, full_tol = 0.03;

constexpr std::uint64_t seed = 2024;
}  // namespace limits

namespace {

enum class Verdict { pass, fail, skip };

struct Gate {
  int failures = 0;
  void report(int id, const char* name, Verdict v, const std::string& detail) {
    const char* tag = v == Verdict::pass ? "PASS" : v == Verdict::fail ? "FAIL" : "SKIP";
    if (v == Verdict::fail) ++failures;
    std::printf("[%s] %2d %-22s %s\n", tag, id, name, detail.c_str());
    std::fflush(stdout);
  }
  void run(int id, const char* name, const std::function<std::pair<Verdict, std::string>()>& body) {
    try {
      auto [v, detail] = body();
      report(id, name, v, detail);
    } catch (const std::exception& e) {
      report(id, name, Verdict::fail, std::string("exception: ") + e.what());
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Verdict verdict(bool ok) { return ok ? Verdict::pass : Verdict::fail; }

const SyntheticDataset& ground_truth() {
  static const SyntheticDataset data =
      make_synthetic({.users = limits::synth_users, .actions = limits::synth_actions, .seed = limits::seed});
  return data;
}

ExperimentConfig base_config() {
  ExperimentConfig c;
  c.seed = limits::seed;
  return c;
}

std::pair<Verdict, std::string> lcs_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937 rng(limits::seed);
  int matches = 0;
  for (int trial = 0; trial < limits::lcs_trials; ++trial) {
    std::vector<int> a(rng() % (limits::lcs_max_len + 1)), b(rng() % (limits::lcs_max_len + 1));
    for (auto& x : a) x = static_cast<int>(rng() % limits::lcs_alphabet);
    for (auto& x : b) x = static_cast<int>(rng() % limits::lcs_alphabet);
    const std::vector<Symbol> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    const auto want = oracle::lcs(a, b);
    matches += lcs_length(sa, sb) == want && LcsMatcher(sa, limits::lcs_alphabet).lcs(sb) == want;
  }
  const double secs = seconds_since(t0);
  return {verdict(matches == limits::lcs_trials && secs < limits::lcs_seconds),
          fmt("%d/%d pairs exact, %.2fs (limit %.0fs)", matches, limits::lcs_trials, secs, limits::lcs_seconds)};
}

std::pair<Verdict, std::string> auc_oracle() {
  std::mt19937 rng(limits::seed);
  int matches = 0;
  for (int trial = 0; trial < limits::auc_trials; ++trial) {
    const std::size_t n = 2 + rng() % (limits::auc_max_n - 1);
    std::vector<double> s(n);
    std::vector<int> l(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng() % 6);  // few distinct values, many ties
      l[i] = static_cast<int>(rng() % 2);
    }
    l[0] = 1;
    l[1] = 0;
    matches += auc(s, l) == oracle::auc_pairs(s, l);
  }
  return {verdict(matches == limits::auc_trials), fmt("%d/%d score sets exact", matches, limits::auc_trials)};
}

std::pair<Verdict, std::string> irt_numerics() {
  const auto data = make_synthetic({.users = 60, .actions = 10, .min_length = 5, .mean_length = 15, .seed = limits::seed});
  const RaschObjective obj(data.corpus, 1.0);
  std::mt19937_64 rng(limits::seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<double> w(obj.dimension()), g(obj.dimension());
    for (auto& x : w) x = normal(rng);
    obj.value_and_gradient(w, g);
    for (std::size_t i = 0; i < w.size(); ++i) {
      auto wp = w, wm = w;
      wp[i] += limits::irt_fd_step;
      wm[i] -= limits::irt_fd_step;
      const double fd = (obj.value(wp) - obj.value(wm)) / (2 * limits::irt_fd_step);
      worst = std::max(worst, std::abs(fd - g[i]) / std::max(1.0, std::abs(fd) + std::abs(g[i])));
    }
  }
  IrtFitReport base;
  fit_irt(data.corpus, {}, &base);
  double spread = 0.0;
  std::normal_distribution<double> wide(0.0, 3.0);
  for (int r = 0; r < limits::irt_restarts; ++r) {
    IrtFitOptions opts;
    opts.initial = std::vector<double>(obj.dimension());
    for (auto& x : *opts.initial) x = wide(rng);
    IrtFitReport rep;
    fit_irt(data.corpus, opts, &rep);
    spread = std::max(spread, std::abs(rep.objective - base.objective));
  }
  return {verdict(worst < limits::irt_fd_rel && spread <= limits::irt_restart_objective),
          fmt("fd rel err %.2e (< %.0e), restart spread %.2e (<= %.0e)", worst, limits::irt_fd_rel, spread,
              limits::irt_restart_objective)};
}

std::pair<Verdict, std::string> gru_numerics() {
  Vocabulary vocab({"A", "B", "C", "D", "E"});
  auto model = GruModel::random(vocab, limits::gru_hidden, limits::seed);
  std::mt19937 rng(limits::seed);
  std::vector<ActionIndex> seq(limits::gru_length);
  for (auto& a : seq) a = static_cast<ActionIndex>(rng() % limits::gru_vocab);
  GruParameters grad(limits::gru_vocab, limits::gru_hidden);
  gru_batch_loss(model, {&seq}, &grad);
  std::vector<double> analytic;
  grad.visit([&](const char*, Eigen::Map<Eigen::VectorXd> g) {
    for (Eigen::Index i = 0; i < g.size(); ++i) analytic.push_back(g[i]);
  });
  std::vector<double> numeric;
  model.params().visit([&](const char*, Eigen::Map<Eigen::VectorXd> w) {
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double keep = w[i];
      w[i] = keep + limits::gru_fd_step;
      const double up = gru_batch_loss(model, {&seq}, nullptr);
      w[i] = keep - limits::gru_fd_step;
      const double down = gru_batch_loss(model, {&seq}, nullptr);
      w[i] = keep;
      numeric.push_back((up - down) / (2 * limits::gru_fd_step));
    }
  });
  double diff = 0, na = 0, nn = 0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  const double rel = std::sqrt(diff) / std::max(std::sqrt(na), std::sqrt(nn));

  std::vector<UserSequence> users;
  for (int u = 0; u < 8; ++u) users.push_back({"u" + std::to_string(u), {0, 1, 2}, {1, 0, 1}});
  const Corpus one(users, Vocabulary({"A", "B", "C"}));
  GruTrainOptions opts;
  opts.hidden_size = 16;
  opts.batch_size = 8;
  opts.epochs = 300;
  opts.learning_rate = 0.02;
  opts.seed = limits::seed;
  const auto trained = train_gru(one, opts);
  std::string decoded;
  for (auto a : greedy_decode(trained, 10)) decoded += trained.vocabulary().name(a);
  return {verdict(rel < limits::gru_fd_rel && decoded == "ABC"),
          fmt("fd rel err %.2e (< %.0e), greedy decode '%s' (want 'ABC')", rel, limits::gru_fd_rel, decoded.c_str())};
}

std::pair<Verdict, std::string> recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& truth = ground_truth();
  auto config = base_config();
  const auto data = prepare(truth.corpus, config);
  const auto result = evaluate_generator(data, config, GeneratorSpec::parse("markov"));
  std::vector<double> fitted, actual;
  for (const auto& [name, d] : result.fake_fit.difficulty()) {
    fitted.push_back(d);
    actual.push_back(truth.difficulty.at(name));
  }
  const double r = oracle::pearson(fitted, actual);
  const double secs = seconds_since(t0);
  return {verdict(result.utility.wrmse < limits::recovery_wrmse && r > limits::recovery_pearson &&
                  secs < limits::recovery_seconds),
          fmt("wRMSE %.4f (< %.2f), pearson %.4f (> %.1f), %.1fs", result.utility.wrmse, limits::recovery_wrmse, r,
              limits::recovery_pearson, secs)};
}

std::pair<Verdict, std::string> privacy() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& truth = ground_truth();
  const auto stats = compute_stats(truth.corpus);
  std::set<std::vector<ActionIndex>> unique;
  for (const auto& s : truth.corpus.sequences()) unique.insert(s.actions);
  const bool shape_ok = stats.length_median >= limits::privacy_median_length && unique.size() == stats.users;

  auto config = base_config();
  const auto data = prepare(truth.corpus, config);
  const auto rows = sweep(data, config, parse_generator_list("drop:0,drop:0.25,drop:0.5,drop:0.75,markov"));
  bool rows_ok = true;
  for (const auto& r : rows) rows_ok = rows_ok && r.ok;
  const double drop0 = rows[0].auc, markov = rows[4].auc;
  bool monotone = true;
  for (std::size_t i = 1; i < 4; ++i) monotone = monotone && rows[i].auc <= rows[i - 1].auc;
  const double secs = seconds_since(t0);
  return {verdict(shape_ok && rows_ok && drop0 > limits::drop0_auc && markov >= limits::markov_auc_lo &&
                  markov <= limits::markov_auc_hi && monotone && secs < limits::privacy_seconds),
          fmt("median len %zu, unique %zu/%zu; drop AUC %.3f/%.3f/%.3f/%.3f (non-increasing: %s); markov AUC %.3f; %.1fs",
              stats.length_median, unique.size(), stats.users, rows[0].auc, rows[1].auc, rows[2].auc, rows[3].auc,
              monotone ? "yes" : "no", markov, secs)};
}

std::pair<Verdict, std::string> exact_zeros() {
  const auto& truth = ground_truth();
  auto config = base_config();
  const auto data = prepare(truth.corpus, config);
  const auto refit = fit_irt(data.training);
  const auto self = evaluate_utility(data.training, data.training_fit, data.training, refit);
  const auto dropped = drop_and_renumber(data.training, 0.0, stage_seed(config.seed, "drop"));
  std::size_t perfect = 0;
  for (const auto& s : match_scores(data.training, dropped)) perfect += s.score == 1.0;
  return {verdict(self.rmse == 0.0 && self.wrmse == 0.0 && perfect == data.training.num_users()),
          fmt("self RMSE %g, wRMSE %g; drop:0 LCS 1.0 for %zu/%zu users", self.rmse, self.wrmse, perfect,
              data.training.num_users())};
}

std::pair<Verdict, std::string> throughput() {
  auto t0 = std::chrono::steady_clock::now();
  const auto model = fit_markov(ground_truth().corpus);
  std::size_t total = 0, batch = 0;
  while (total < limits::markov_actions) {
    for (const auto& s : sample_markov(model, 5000, substream_seed(limits::seed, batch++))) total += s.size();
  }
  const double markov_secs = seconds_since(t0);

  std::mt19937 rng(limits::seed);
  auto random_corpus = [&](const char* prefix) {
    std::vector<UserSequence> users;
    for (std::size_t u = 0; u < limits::lcs_audit_users; ++u) {
      UserSequence s{prefix + std::to_string(u), {}, {}};
      for (std::size_t t = 0; t < limits::lcs_audit_length; ++t) {
        s.actions.push_back(static_cast<ActionIndex>(rng() % limits::synth_actions));
        s.outcomes.push_back(static_cast<std::uint8_t>(rng() % 2));
      }
      users.push_back(std::move(s));
    }
    std::vector<std::string> names;
    for (std::size_t a = 0; a < limits::synth_actions; ++a) names.push_back("a" + std::to_string(a));
    return Corpus(std::move(users), Vocabulary(names));
  };
  const auto original = random_corpus("o");
  const auto fake = random_corpus("f");
  t0 = std::chrono::steady_clock::now();
  const auto scores = match_scores(original, fake);
  const double lcs_secs = seconds_since(t0);
  return {verdict(markov_secs <= limits::markov_seconds && lcs_secs <= limits::lcs_audit_seconds &&
                  scores.size() == limits::lcs_audit_users),
          fmt("markov fit+sample %zu actions in %.2fs (<= %.0fs); LCS %zux%zu len %zu in %.2fs (<= %.0fs)", total,
              markov_secs, limits::markov_seconds, limits::lcs_audit_users, limits::lcs_audit_users,
              limits::lcs_audit_length, lcs_secs, limits::lcs_audit_seconds)};
}

std::pair<Verdict, std::string> full_data() {
  const char* path = std::getenv("EDUSYNTH_ASSISTMENTS_CSV");
  if (!path || !*path) return {Verdict::skip, "EDUSYNTH_ASSISTMENTS_CSV not set"};
  auto config = base_config();
  config.dataset = path;
  const auto data = prepare(config);
  const auto rows = sweep(data, config, parse_generator_list("drop:0,markov"));
  const bool stats_ok = (data.stats.size + 500) / 1000 == limits::full_rows_k && data.stats.users == limits::full_users &&
                        data.stats.actions == limits::full_actions;
  const bool drop_ok = rows[0].ok && std::abs(rows[0].auc - limits::full_drop0_auc) <= limits::full_tol;
  const bool markov_ok = rows[1].ok && std::abs(rows[1].wrmse - limits::full_markov_wrmse) <= limits::full_tol;
  return {verdict(stats_ok && drop_ok && markov_ok),
          fmt("rows %zu, users %zu, actions %zu; drop:0 AUC %.3f; markov wRMSE %.3f", data.stats.size,
              data.stats.users, data.stats.actions, rows[0].auc, rows[1].wrmse)};
}

std::pair<Verdict, std::string> determinism() {
  const auto dir = std::filesystem::temp_directory_path() / ("edusynth_accept_" + std::to_string(limits::seed));
  std::filesystem::create_directories(dir);
  const auto csv = dir / "data.csv";
  save_csv(make_synthetic({.users = 200, .actions = 20, .seed = limits::seed}).corpus, csv);
  bool same = true;
  std::string sizes;
  for (const char* g : {"markov", "drop:0.5", "rnn"}) {
    auto config = base_config();
    config.dataset = csv;
    config.generator = GeneratorSpec::parse(g);
    config.epochs = 2;
    config.hidden_size = 16;
    const auto a = run_experiment(config).dump(2);
    const auto b = run_experiment(config).dump(2);
    same = same && a == b;
    sizes += fmt("%s %zu bytes; ", g, a.size());
  }
  std::filesystem::remove_all(dir);
  return {verdict(same), sizes + (same ? "byte-identical" : "reports differ")};
}

}  // namespace

int main() {
  Gate gate;
  gate.run(1, "lcs-oracle", lcs_oracle);
  gate.run(2, "auc-oracle", auc_oracle);
  gate.run(3, "irt-numerics", irt_numerics);
  gate.run(4, "gru-numerics", gru_numerics);
  gate.run(5, "recovery", recovery);
  gate.run(6, "privacy", privacy);
  gate.run(7, "exact-zeros", exact_zeros);
  gate.run(8, "throughput", throughput);
  gate.run(9, "full-data", full_data);
  gate.run(10, "determinism", determinism);
  std::printf("%s: %d criterion(s) failed\n", gate.failures ? "FAILED" : "OK", gate.failures);
  return gate.failures ? 1 : 0;
}
