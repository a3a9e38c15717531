// SPDX-License-Identifier: Apache-2.0
#include "edusynth/serialize.hpp"

#include <fstream>
#include <ostream>

#include "edusynth/error.hpp"

namespace edusynth {

Json to_json(const CorpusStats& s) {
  return Json{{"size", s.size},
              {"users", s.users},
              {"actions", s.actions},
              {"repeat_median", s.repeat_median},
              {"repeat_max", s.repeat_max},
              {"length_min", s.length_min},
              {"length_median", s.length_median},
              {"length_max", s.length_max}};
}

Json to_json(const IrtModel& m) {
  return Json{{"reg_strength", m.reg_strength()}, {"theta", m.theta()}, {"d", m.difficulty()}};
}

IrtModel irt_from_json(const Json& j) {
  try {
    return IrtModel(j.at("reg_strength").get<double>(), j.at("theta").get<std::map<std::string, double>>(),
                    j.at("d").get<std::map<std::string, double>>());
  } catch (const Json::exception& e) {
    throw Error(std::string("invalid IRT model: ") + e.what());
  }
}

Json to_json(const AbilityPrior& p) { return Json{{"mu", p.mu}, {"sigma", p.sigma}}; }

AbilityPrior prior_from_json(const Json& j) {
  try {
    AbilityPrior p{j.at("mu").get<double>(), j.at("sigma").get<double>()};
    if (!(p.sigma > 0)) throw Error("prior sigma must be positive");
    return p;
  } catch (const Json::exception& e) {
    throw Error(std::string("invalid prior: ") + e.what());
  }
}

Json to_json(const MarkovModel& m) {
  const auto& vocab = m.vocabulary();
  const auto v = static_cast<ActionIndex>(m.num_actions());
  Json start = Json::object();
  Json trans = Json::object();
  for (ActionIndex s = 0; s < v; ++s) {
    if (m.start_probability(s) > 0) start[vocab.name(s)] = m.start_probability(s);
    Json row = Json::object();
    for (ActionIndex u = 0; u <= v; ++u) {
      const double p = m.transition(s, u);
      if (p > 0) row[u == v ? std::string(kStopKey) : vocab.name(u)] = p;
    }
    trans[vocab.name(s)] = std::move(row);
  }
  return Json{{"actions", vocab.names()}, {"start", start}, {"trans", trans}, {"length_cap", m.length_cap()}};
}

MarkovModel markov_from_json(const Json& j) {
  try {
    Vocabulary vocab(j.at("actions").get<std::vector<std::string>>());
    const std::size_t v = vocab.size();
    auto index_of = [&](const std::string& name) {
      auto idx = vocab.find(name);
      if (!idx) throw Error("unknown action '" + name + "' in Markov model");
      return static_cast<std::size_t>(*idx);
    };
    std::vector<double> start(v, 0.0);
    for (const auto& [name, p] : j.at("start").items()) start[index_of(name)] = p.get<double>();
    std::vector<double> trans(v * (v + 1), 0.0);
    for (const auto& [from, row] : j.at("trans").items()) {
      const std::size_t s = index_of(from);
      for (const auto& [to, p] : row.items()) {
        const std::size_t u = to == kStopKey ? v : index_of(to);
        trans[s * (v + 1) + u] = p.get<double>();
      }
    }
    return MarkovModel(std::move(vocab), std::move(start), std::move(trans), j.at("length_cap").get<std::size_t>());
  } catch (const Json::exception& e) {
    throw Error(std::string("invalid Markov model: ") + e.what());
  }
}

Json to_json(const GruModel& m) {
  Json tensors = Json::object();
  m.params().visit([&](const char* name, auto v) {
    tensors[name] = std::vector<double>(v.data(), v.data() + v.size());
  });
  return Json{{"format", "edusynth-gru"},
              {"version", 1},
              {"vocabulary", m.vocabulary().names()},
              {"dims", {{"vocab_size", m.vocab_size()}, {"hidden_size", m.hidden_size()}}},
              {"hyper", {{"batch_size", m.batch_size}, {"learning_rate", m.learning_rate}}},
              {"tensors", tensors}};
}

GruModel gru_from_json(const Json& j) {
  try {
    if (j.at("format") != "edusynth-gru" || j.at("version") != 1) throw Error("unsupported GRU model format");
    GruModel m(Vocabulary(j.at("vocabulary").get<std::vector<std::string>>()),
               j.at("dims").at("hidden_size").get<std::size_t>());
    if (m.vocab_size() != j.at("dims").at("vocab_size").get<std::size_t>()) throw Error("GRU vocabulary size mismatch");
    m.batch_size = j.at("hyper").at("batch_size").get<std::size_t>();
    m.learning_rate = j.at("hyper").at("learning_rate").get<double>();
    const auto& tensors = j.at("tensors");
    m.params().visit([&](const char* name, Eigen::Map<Eigen::VectorXd> v) {
      const auto values = tensors.at(name).get<std::vector<double>>();
      if (values.size() != static_cast<std::size_t>(v.size())) throw Error(std::string("tensor size mismatch for ") + name);
      for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = values[static_cast<std::size_t>(i)];
    });
    if (!m.params().all_finite()) throw Error("GRU model has non-finite parameters");
    return m;
  } catch (const Json::exception& e) {
    throw Error(std::string("invalid GRU model: ") + e.what());
  }
}

Json to_json(const AuditReport& r, bool include_scores) {
  Json j{{"auc", r.auc}, {"p", r.p}, {"entropy_threshold", r.entropy_threshold}, {"filtered_fraction", r.filtered_fraction}};
  if (include_scores) {
    Json scores = Json::array();
    for (const auto& s : r.scores) scores.push_back({{"user", s.user_id}, {"score", s.score}, {"label", s.label}});
    j["scores"] = std::move(scores);
  }
  return j;
}

Json to_json(const UtilityReport& r) {
  return Json{{"rmse", r.rmse},
              {"wrmse", r.wrmse},
              {"excluded_weight", r.excluded_weight},
              {"tv_action_hist", r.tv_action_hist},
              {"tv_length_hist", r.tv_length_hist}};
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error("cannot parse '" + path.string() + "': " + e.what());
  }
}

void write_json(const Json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

void write_histogram(const std::vector<std::pair<std::string, std::size_t>>& rows, std::ostream& out) {
  out << "key,count\n";
  for (const auto& [k, c] : rows) out << k << ',' << c << '\n';
}

void write_histogram(const CountHistogram& hist, std::ostream& out) {
  out << "key,count\n";
  for (const auto& [k, c] : hist) out << k << ',' << c << '\n';
}

void write_histograms(const HistogramBundle& h, const std::filesystem::path& dir, const std::string& prefix) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / (prefix + name));
    if (!out) throw Error("cannot write histogram into '" + dir.string() + "'");
    return out;
  };
  {
    auto out = open("actions.csv");
    write_histogram(h.actions_by_count(), out);
  }
  {
    auto out = open("lengths.csv");
    write_histogram(h.lengths, out);
  }
  auto out = open("repeats.csv");
  write_histogram(h.repeats, out);
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

void write_lines(const std::vector<std::string>& lines, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  for (const auto& l : lines) out << l << '\n';
}

}  // namespace edusynth
