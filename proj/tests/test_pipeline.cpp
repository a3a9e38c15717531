// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdlib>
#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "edusynth/error.hpp"
#include "edusynth/pipeline.hpp"
#include "edusynth/synthetic.hpp"
#include "helpers.hpp"

using namespace edusynth;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_synthetic(const testing::TempDir& dir, std::size_t users = 80, std::uint64_t seed = 3) {
  const auto path = dir / "data.csv";
  save_csv(make_synthetic({.users = users, .actions = 15, .mean_length = 40, .seed = seed}).corpus, path);
  return path;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(EDUSYNTH_CLI) + " " + args + " 2>/dev/null";
  return std::system(cmd.c_str());
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("generator specs parse and label") {
  CHECK(GeneratorSpec::parse("markov").kind == GeneratorSpec::Kind::markov);
  CHECK(GeneratorSpec::parse("rnn").kind == GeneratorSpec::Kind::rnn);
  CHECK(GeneratorSpec::parse("gru").kind == GeneratorSpec::Kind::rnn);
  const auto d = GeneratorSpec::parse("drop:0.25");
  CHECK(d.kind == GeneratorSpec::Kind::drop);
  CHECK(d.drop_ratio == 0.25);
  CHECK(d.label() == "drop:0.25");
  CHECK(GeneratorSpec::parse("drop:0").label() == "drop:0");
  CHECK_THROWS_AS(GeneratorSpec::parse("drop:1.5"), Error);
  CHECK_THROWS_AS(GeneratorSpec::parse("drop:x"), Error);
  CHECK_THROWS_AS(GeneratorSpec::parse("lstm"), Error);
  CHECK(parse_generator_list("drop:0, markov ,rnn").size() == 3);
  CHECK_THROWS_AS(parse_generator_list(""), Error);
}

TEST_CASE("config file parsing") {
  std::stringstream ss(
      "# experiment\n"
      "dataset = data.csv\n"
      "generator = drop:0.5\n"
      "seed = 42   # trailing comment\n"
      "lr = 0.01\n"
      "n_fake = 10\n"
      "include_outcomes = true\n");
  const auto c = parse_config(ss);
  CHECK(c.dataset == "data.csv");
  CHECK(c.generator.drop_ratio == 0.5);
  CHECK(c.seed == 42);
  CHECK(c.learning_rate == 0.01);
  CHECK(c.n_fake == 10u);
  CHECK(c.include_outcomes);
  std::stringstream bad("seed = 1\nbogus = 3\n");
  try {
    parse_config(bad);
    FAIL("expected LoadError");
  } catch (const LoadError& e) {
    CHECK(e.line() == 2);
  }
  std::stringstream bad_value("epochs = many\n");
  CHECK_THROWS_AS(parse_config(bad_value), LoadError);
}

TEST_CASE("stage seeds are distinct and stable") {
  std::set<std::uint64_t> seen;
  for (auto s : kSeedStages) seen.insert(stage_seed(7, s));
  CHECK(seen.size() == std::size(kSeedStages));
  CHECK(stage_seed(7, "split") == stage_seed(7, "split"));
  CHECK(stage_seed(7, "split") != stage_seed(8, "split"));
}

TEST_CASE("run is deterministic to the byte") {
  testing::TempDir dir;
  ExperimentConfig c;
  c.dataset = write_synthetic(dir);
  c.seed = 11;
  for (const char* g : {"markov", "drop:0.3"}) {
    c.generator = GeneratorSpec::parse(g);
    CHECK(run_experiment(c).dump(2) == run_experiment(c).dump(2));
  }
}

TEST_CASE("drop:0 reports zero error") {
  testing::TempDir dir;
  ExperimentConfig c;
  c.dataset = write_synthetic(dir);
  c.generator = GeneratorSpec::parse("drop:0");
  const auto r = run_experiment(c);
  CHECK(r.at("utility").at("rmse") == 0.0);
  CHECK(r.at("utility").at("wrmse") == 0.0);
  CHECK(r.at("audit").at("auc").get<double>() > 0.9);
  CHECK(r.at("audit").at("scores").size() > 0);
  c.include_scores = false;
  CHECK_FALSE(run_experiment(c).at("audit").contains("scores"));
}

TEST_CASE("sweep reuses one split and keeps going after a failing row") {
  testing::TempDir dir;
  ExperimentConfig c;
  c.dataset = write_synthetic(dir);
  c.seed = 5;
  const auto data = prepare(c);
  const auto gens = parse_generator_list("drop:0,drop:0.5,markov");
  const auto rows = sweep(data, c, gens);
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 0; i < gens.size(); ++i) {
    const auto alone = evaluate_generator(data, c, gens[i]);
    CHECK(rows[i].ok);
    CHECK(rows[i].auc == alone.audit.auc);
    CHECK(rows[i].wrmse == alone.utility.wrmse);
  }
  CHECK(rows[0].auc >= rows[1].auc);
  CHECK_THROWS_AS(sweep(data, c, {}), Error);

  auto broken = c;
  broken.max_len = 0;
  const auto mixed = sweep(data, broken, parse_generator_list("rnn,drop:0"));
  CHECK_FALSE(mixed[0].ok);
  CHECK(mixed[0].error.find("sample-gru") != std::string::npos);
  CHECK(mixed[1].ok);

  std::stringstream rows_csv, table, scatter;
  write_sweep_rows(mixed, rows_csv);
  write_sweep_table(rows, table);
  write_sweep_scatter(mixed, scatter);
  CHECK(rows_csv.str().find("rnn,,,,error") != std::string::npos);
  CHECK(table.str().rfind("metric,drop:0,drop:0.5,markov\nRMSE,", 0) == 0);
  const std::string sc = scatter.str();
  CHECK(sc.rfind("generator,wrmse,auc\ndrop:0,0.000000,", 0) == 0);
  CHECK(std::count(sc.begin(), sc.end(), '\n') == 2);
}

TEST_CASE("stage failures name the stage and roll back artifacts") {
  testing::TempDir dir;
  ExperimentConfig c;
  c.dataset = write_synthetic(dir);
  c.generator = GeneratorSpec::parse("rnn");
  c.max_len = 0;
  c.epochs = 1;
  c.hidden_size = 4;
  c.artifacts_dir = dir / "artifacts";
  try {
    run_experiment(c);
    FAIL("expected StageError");
  } catch (const StageError& e) {
    CHECK(e.stage() == "sample-gru");
  }
  const bool empty = !fs::exists(c.artifacts_dir) || fs::is_empty(c.artifacts_dir);
  CHECK(empty);

  ExperimentConfig missing;
  missing.dataset = dir / "nope.csv";
  try {
    run_experiment(missing);
    FAIL("expected StageError");
  } catch (const StageError& e) {
    CHECK(e.stage() == "load");
  }
}

TEST_CASE("artifacts are written for a successful run") {
  testing::TempDir dir;
  ExperimentConfig c;
  c.dataset = write_synthetic(dir);
  c.artifacts_dir = dir / "art";
  run_experiment(c);
  for (const char* f : {"original.csv", "training.csv", "holdout.csv", "training_users.txt", "irt_training.json",
                        "prior.json", "markov.json", "fake.csv", "irt_fake.json", "report.json"})
    CHECK(fs::exists(c.artifacts_dir / f));
}

TEST_CASE("manual CLI stages reproduce run") {
  testing::TempDir dir;
  const auto data = write_synthetic(dir, 60, 9);
  const std::string d = dir.path().string() + "/";
  const std::string seed = "--seed 17";
  REQUIRE(cli("run --dataset " + data.string() + " --generator markov " + seed + " --artifacts-dir " + d + "art --output " + d + "report.json") == 0);

  REQUIRE(cli("ingest --input " + data.string() + " --output " + d + "orig.csv") == 0);
  REQUIRE(cli("split --input " + d + "orig.csv " + seed + " --training " + d + "tr.csv --holdout " + d + "ho.csv --training-users " + d + "users.txt") == 0);
  REQUIRE(cli("fit-irt --input " + d + "tr.csv --output " + d + "irt.json --prior " + d + "prior.json") == 0);
  REQUIRE(cli("fit-markov --input " + d + "tr.csv --output " + d + "markov.json") == 0);
  const auto n = read_lines(d + "users.txt").size();
  REQUIRE(cli("generate --generator markov --model " + d + "markov.json --irt " + d + "irt.json --prior " + d + "prior.json --n " + std::to_string(n) + " " + seed + " --output " + d + "fake.csv") == 0);
  REQUIRE(cli("audit --original " + d + "orig.csv --training-users " + d + "users.txt --fake " + d + "fake.csv --output " + d + "audit.json") == 0);
  REQUIRE(cli("utility --training " + d + "tr.csv --fake " + d + "fake.csv --output " + d + "utility.json") == 0);

  CHECK(slurp(d + "tr.csv") == slurp(d + "art/training.csv"));
  CHECK(slurp(d + "users.txt") == slurp(d + "art/training_users.txt"));
  CHECK(slurp(d + "irt.json") == slurp(d + "art/irt_training.json"));
  CHECK(slurp(d + "markov.json") == slurp(d + "art/markov.json"));
  CHECK(slurp(d + "fake.csv") == slurp(d + "art/fake.csv"));
  const auto report = read_json(d + "report.json");
  CHECK(read_json(d + "audit.json") == report.at("audit"));
  CHECK(read_json(d + "utility.json") == report.at("utility"));
}

TEST_CASE("CLI reports errors without partial outputs") {
  testing::TempDir dir;
  const std::string d = dir.path().string() + "/";
  std::ofstream(d + "bad.csv") << "user_id,action_id,outcome\nu,a,7\n";
  CHECK(cli("stats --input " + d + "bad.csv --output " + d + "stats.json") != 0);
  CHECK_FALSE(fs::exists(d + "stats.json"));
  CHECK_FALSE(fs::exists(d + "stats.json.tmp"));
  CHECK(cli("sweep --dataset " + d + "bad.csv --generators drop:0 --output " + d + "rows.csv") != 0);
  CHECK_FALSE(fs::exists(d + "rows.csv"));
  CHECK(cli("no-such-command") != 0);
}

}  // TEST_SUITE
