// SPDX-License-Identifier: Apache-2.0
#include "edusynth/gru.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "edusynth/error.hpp"
#include "edusynth/rng.hpp"

namespace edusynth {

using Eigen::MatrixXd;
using Eigen::VectorXd;

GruParameters::GruParameters(std::size_t vocab_size, std::size_t hidden_size) {
  const auto v = static_cast<Eigen::Index>(vocab_size);
  const auto h = static_cast<Eigen::Index>(hidden_size);
  embedding = MatrixXd::Zero(h, v + 1);
  w_reset = MatrixXd::Zero(h, h);
  u_reset = MatrixXd::Zero(h, h);
  b_reset = VectorXd::Zero(h);
  w_update = MatrixXd::Zero(h, h);
  u_update = MatrixXd::Zero(h, h);
  b_update = VectorXd::Zero(h);
  w_cand = MatrixXd::Zero(h, h);
  u_cand = MatrixXd::Zero(h, h);
  b_cand = VectorXd::Zero(h);
  w_out = MatrixXd::Zero(v + 1, h);
  b_out = VectorXd::Zero(v + 1);
}

std::size_t GruParameters::parameter_count() const {
  std::size_t n = 0;
  visit([&](const char*, auto v) { n += static_cast<std::size_t>(v.size()); });
  return n;
}

bool GruParameters::all_finite() const {
  bool ok = true;
  visit([&](const char*, auto v) { ok = ok && v.allFinite(); });
  return ok;
}

GruModel::GruModel(Vocabulary vocabulary, std::size_t hidden_size)
    : vocabulary_(std::move(vocabulary)), hidden_size_(hidden_size), params_(vocabulary_.size(), hidden_size) {
  if (vocabulary_.size() == 0) throw Error("GRU needs a non-empty vocabulary");
  if (hidden_size == 0) throw Error("hidden size must be positive");
}

GruModel GruModel::random(Vocabulary vocabulary, std::size_t hidden_size, std::uint64_t seed, double scale) {
  GruModel model(std::move(vocabulary), hidden_size);
  Rng rng(seed);
  const double k = scale / std::sqrt(static_cast<double>(hidden_size));
  std::uniform_real_distribution<double> uni(-k, k);
  std::normal_distribution<double> normal(0.0, scale);
  model.params_.visit([&](const char* name, Eigen::Map<VectorXd> v) {
    const bool is_embedding = std::string_view(name) == "embedding";
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = is_embedding ? normal(rng) : uni(rng);
  });
  return model;
}

namespace {

MatrixXd sigmoid_of(const MatrixXd& a) {
  return a.unaryExpr([](double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); });
}

// One recurrence step for a block of columns.
struct StepValues {
  MatrixXd reset, update, cand, gated_prev, hidden;
};

void gru_step(const GruParameters& p, const MatrixXd& x, const MatrixXd& h_prev, StepValues& out) {
  out.reset = sigmoid_of((p.w_reset * x + p.u_reset * h_prev).colwise() + p.b_reset);
  out.update = sigmoid_of((p.w_update * x + p.u_update * h_prev).colwise() + p.b_update);
  out.gated_prev = out.reset.cwiseProduct(h_prev);
  out.cand = ((p.w_cand * x + p.u_cand * out.gated_prev).colwise() + p.b_cand).array().tanh().matrix();
  out.hidden = h_prev + out.update.cwiseProduct(out.cand - h_prev);
}

// Column-wise softmax in place.
void softmax_columns(MatrixXd& logits) {
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    auto col = logits.col(c);
    const double m = col.maxCoeff();
    col = (col.array() - m).exp().matrix();
    col /= col.sum();
  }
}

MatrixXd gather(const MatrixXd& embedding, const std::vector<ActionIndex>& tokens) {
  MatrixXd x(embedding.rows(), static_cast<Eigen::Index>(tokens.size()));
  for (std::size_t b = 0; b < tokens.size(); ++b) x.col(static_cast<Eigen::Index>(b)) = embedding.col(tokens[b]);
  return x;
}

void check_actions(const GruModel& model, std::span<const ActionIndex> actions) {
  for (ActionIndex a : actions) {
    if (a < 0 || static_cast<std::size_t>(a) >= model.vocab_size())
      throw Error("action index " + std::to_string(a) + " out of range for GRU vocabulary");
  }
}

}  // namespace

GruForward gru_forward(const GruModel& model, std::span<const ActionIndex> actions) {
  check_actions(model, actions);
  const auto& p = model.params();
  GruForward out;
  MatrixXd h = MatrixXd::Zero(static_cast<Eigen::Index>(model.hidden_size()), 1);
  StepValues sv;
  for (ActionIndex a : actions) {
    gru_step(p, p.embedding.col(a), h, sv);
    h = sv.hidden;
    MatrixXd y = (p.w_out * h).colwise() + p.b_out;
    softmax_columns(y);
    out.hidden.emplace_back(h.col(0));
    out.probabilities.emplace_back(y.col(0));
  }
  return out;
}

std::vector<GruForward> gru_forward_batch(const GruModel& model, const std::vector<std::vector<ActionIndex>>& sequences) {
  std::size_t longest = 0;
  for (const auto& s : sequences) {
    check_actions(model, s);
    longest = std::max(longest, s.size());
  }
  const auto& p = model.params();
  const std::size_t batch = sequences.size();
  std::vector<GruForward> out(batch);
  MatrixXd h = MatrixXd::Zero(static_cast<Eigen::Index>(model.hidden_size()), static_cast<Eigen::Index>(batch));
  StepValues sv;
  std::vector<ActionIndex> tokens(batch);
  for (std::size_t t = 0; t < longest; ++t) {
    for (std::size_t b = 0; b < batch; ++b) tokens[b] = t < sequences[b].size() ? sequences[b][t] : 0;
    gru_step(p, gather(p.embedding, tokens), h, sv);
    h = sv.hidden;
    MatrixXd y = (p.w_out * h).colwise() + p.b_out;
    softmax_columns(y);
    for (std::size_t b = 0; b < batch; ++b) {
      if (t >= sequences[b].size()) continue;
      out[b].hidden.emplace_back(h.col(static_cast<Eigen::Index>(b)));
      out[b].probabilities.emplace_back(y.col(static_cast<Eigen::Index>(b)));
    }
  }
  return out;
}

double gru_batch_loss(const GruModel& model, const std::vector<const std::vector<ActionIndex>*>& batch,
                      GruParameters* grad) {
  if (batch.empty()) throw Error("empty batch");
  const std::size_t len = batch.front()->size();
  for (const auto* s : batch) {
    if (s->size() != len) throw Error("batch sequences must share one length");
    check_actions(model, *s);
  }
  const auto& p = model.params();
  const std::size_t B = batch.size();
  const std::size_t steps = len + 1;
  const auto H = static_cast<Eigen::Index>(model.hidden_size());
  const ActionIndex stop = model.stop_symbol();

  std::vector<std::vector<ActionIndex>> inputs(steps, std::vector<ActionIndex>(B));
  std::vector<std::vector<ActionIndex>> targets(steps, std::vector<ActionIndex>(B));
  for (std::size_t b = 0; b < B; ++b) {
    const auto& s = *batch[b];
    for (std::size_t t = 0; t < steps; ++t) {
      inputs[t][b] = t == 0 ? model.start_symbol() : s[t - 1];
      targets[t][b] = t < len ? s[t] : stop;
    }
  }

  std::vector<StepValues> cache(steps);
  std::vector<MatrixXd> probs(steps);
  MatrixXd h = MatrixXd::Zero(H, static_cast<Eigen::Index>(B));
  double loss = 0.0;
  for (std::size_t t = 0; t < steps; ++t) {
    gru_step(p, gather(p.embedding, inputs[t]), h, cache[t]);
    h = cache[t].hidden;
    MatrixXd logits = (p.w_out * h).colwise() + p.b_out;
    for (std::size_t b = 0; b < B; ++b) {
      const auto col = logits.col(static_cast<Eigen::Index>(b));
      const double m = col.maxCoeff();
      const double lse = m + std::log((col.array() - m).exp().sum());
      loss += lse - col(targets[t][b]);
    }
    softmax_columns(logits);
    probs[t] = std::move(logits);
  }
  const double n_tokens = static_cast<double>(steps * B);
  loss /= n_tokens;
  if (!grad) return loss;

  GruParameters& g = *grad;
  MatrixXd dh_next = MatrixXd::Zero(H, static_cast<Eigen::Index>(B));
  const MatrixXd zeros = MatrixXd::Zero(H, static_cast<Eigen::Index>(B));
  for (std::size_t t = steps; t-- > 0;) {
    const StepValues& c = cache[t];
    const MatrixXd& h_prev = t == 0 ? zeros : cache[t - 1].hidden;
    const MatrixXd x = gather(p.embedding, inputs[t]);

    MatrixXd d_logits = probs[t];
    for (std::size_t b = 0; b < B; ++b) d_logits(targets[t][b], static_cast<Eigen::Index>(b)) -= 1.0;
    d_logits /= n_tokens;
    g.w_out.noalias() += d_logits * c.hidden.transpose();
    g.b_out += d_logits.rowwise().sum();

    MatrixXd dh = p.w_out.transpose() * d_logits + dh_next;
    const MatrixXd d_update = dh.cwiseProduct(c.cand - h_prev);
    const MatrixXd d_cand = dh.cwiseProduct(c.update);
    MatrixXd dh_prev = dh - dh.cwiseProduct(c.update);

    const MatrixXd da_cand = d_cand.cwiseProduct((1.0 - c.cand.array().square()).matrix());
    g.w_cand.noalias() += da_cand * x.transpose();
    g.u_cand.noalias() += da_cand * c.gated_prev.transpose();
    g.b_cand += da_cand.rowwise().sum();
    const MatrixXd d_gated = p.u_cand.transpose() * da_cand;
    const MatrixXd d_reset = d_gated.cwiseProduct(h_prev);
    dh_prev += d_gated.cwiseProduct(c.reset);
    MatrixXd dx = p.w_cand.transpose() * da_cand;

    const MatrixXd da_update = d_update.cwiseProduct(c.update.cwiseProduct((1.0 - c.update.array()).matrix()));
    g.w_update.noalias() += da_update * x.transpose();
    g.u_update.noalias() += da_update * h_prev.transpose();
    g.b_update += da_update.rowwise().sum();
    dh_prev.noalias() += p.u_update.transpose() * da_update;
    dx.noalias() += p.w_update.transpose() * da_update;

    const MatrixXd da_reset = d_reset.cwiseProduct(c.reset.cwiseProduct((1.0 - c.reset.array()).matrix()));
    g.w_reset.noalias() += da_reset * x.transpose();
    g.u_reset.noalias() += da_reset * h_prev.transpose();
    g.b_reset += da_reset.rowwise().sum();
    dh_prev.noalias() += p.u_reset.transpose() * da_reset;
    dx.noalias() += p.w_reset.transpose() * da_reset;

    for (std::size_t b = 0; b < B; ++b) g.embedding.col(inputs[t][b]) += dx.col(static_cast<Eigen::Index>(b));
    dh_next = std::move(dh_prev);
  }
  return loss;
}

namespace {

// Sequence indices grouped by length, shortest first.
std::map<std::size_t, std::vector<std::size_t>> length_buckets(const Corpus& corpus) {
  std::map<std::size_t, std::vector<std::size_t>> buckets;
  for (std::size_t i = 0; i < corpus.num_users(); ++i) buckets[corpus.sequences()[i].size()].push_back(i);
  return buckets;
}

std::vector<Eigen::Map<VectorXd>> tensors(GruParameters& p) {
  std::vector<Eigen::Map<VectorXd>> out;
  p.visit([&](const char*, Eigen::Map<VectorXd> v) { out.push_back(v); });
  return out;
}

}  // namespace

double gru_corpus_loss(const GruModel& model, const Corpus& corpus) {
  constexpr std::size_t kChunk = 256;
  double total = 0.0;
  double tokens = 0.0;
  for (const auto& [len, members] : length_buckets(corpus)) {
    for (std::size_t start = 0; start < members.size(); start += kChunk) {
      std::vector<const std::vector<ActionIndex>*> batch;
      for (std::size_t i = start; i < std::min(members.size(), start + kChunk); ++i)
        batch.push_back(&corpus.sequences()[members[i]].actions);
      const double n = static_cast<double>(batch.size() * (len + 1));
      total += gru_batch_loss(model, batch, nullptr) * n;
      tokens += n;
    }
  }
  return total / tokens;
}

GruModel train_gru(const Corpus& input, const GruTrainOptions& options, GruTrainReport* report) {
  if (input.empty()) throw Error("cannot train a GRU on an empty corpus");
  const Corpus corpus = with_sorted_vocabulary(input);
  if (options.batch_size == 0) throw Error("batch size must be positive");
  if (!(options.learning_rate > 0)) throw Error("learning rate must be positive");

  GruModel model = GruModel::random(corpus.vocabulary(), options.hidden_size, substream_seed(options.seed, 0));
  model.batch_size = options.batch_size;
  model.learning_rate = options.learning_rate;

  GruTrainReport rep;
  rep.initial_loss = gru_corpus_loss(model, corpus);

  const std::size_t V = corpus.num_actions();
  const std::size_t H = options.hidden_size;
  GruParameters grad(V, H), m(V, H), v(V, H);
  auto param_t = tensors(model.params());
  auto grad_t = tensors(grad);
  auto m_t = tensors(m);
  auto v_t = tensors(v);

  auto buckets = length_buckets(corpus);
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    Rng rng = make_substream(options.seed, epoch + 1);
    double epoch_loss = 0.0;
    double epoch_tokens = 0.0;
    for (auto& [len, members] : buckets) {
      std::shuffle(members.begin(), members.end(), rng);
      for (std::size_t start = 0; start < members.size(); start += options.batch_size) {
        std::vector<const std::vector<ActionIndex>*> batch;
        for (std::size_t i = start; i < std::min(members.size(), start + options.batch_size); ++i)
          batch.push_back(&corpus.sequences()[members[i]].actions);

        for (auto& gt : grad_t) gt.setZero();
        const double loss = gru_batch_loss(model, batch, &grad);
        ++step;
        if (!std::isfinite(loss) || !grad.all_finite())
          throw Error("GRU training diverged at epoch " + std::to_string(epoch) + ", step " + std::to_string(step));

        if (options.clip_norm > 0) {
          double sq = 0.0;
          for (const auto& gt : grad_t) sq += gt.squaredNorm();
          const double gn = std::sqrt(sq);
          if (gn > options.clip_norm)
            for (auto& gt : grad_t) gt *= options.clip_norm / gn;
        }

        const double bc1 = 1.0 - std::pow(options.beta1, static_cast<double>(step));
        const double bc2 = 1.0 - std::pow(options.beta2, static_cast<double>(step));
        for (std::size_t k = 0; k < param_t.size(); ++k) {
          m_t[k] = options.beta1 * m_t[k] + (1.0 - options.beta1) * grad_t[k];
          v_t[k] = options.beta2 * v_t[k] + (1.0 - options.beta2) * grad_t[k].cwiseProduct(grad_t[k]);
          param_t[k].array() -= options.learning_rate * (m_t[k].array() / bc1) /
                                ((v_t[k].array() / bc2).sqrt() + options.epsilon);
        }

        const double n = static_cast<double>(batch.size() * (len + 1));
        epoch_loss += loss * n;
        epoch_tokens += n;
      }
    }
    rep.epoch_losses.push_back(epoch_loss / epoch_tokens);
    if (options.on_epoch) options.on_epoch(epoch, rep.epoch_losses.back());
  }
  rep.steps = step;
  rep.final_loss = gru_corpus_loss(model, corpus);
  if (!std::isfinite(rep.final_loss)) throw Error("GRU training produced a non-finite loss");
  if (report) *report = std::move(rep);
  return model;
}

namespace {

template <class Choose>
std::vector<ActionIndex> decode(const GruModel& model, std::size_t max_len, Choose&& choose) {
  const auto& p = model.params();
  const ActionIndex stop = model.stop_symbol();
  MatrixXd h = MatrixXd::Zero(static_cast<Eigen::Index>(model.hidden_size()), 1);
  StepValues sv;
  ActionIndex token = model.start_symbol();
  std::vector<ActionIndex> seq;
  while (seq.size() < max_len) {
    gru_step(p, p.embedding.col(token), h, sv);
    h = sv.hidden;
    VectorXd logits = p.w_out * h.col(0) + p.b_out;
    if (seq.empty()) logits(stop) = -std::numeric_limits<double>::infinity();
    const ActionIndex next = choose(logits);
    if (next == stop) break;
    seq.push_back(next);
    token = next;
  }
  return seq;
}

ActionIndex argmax(const VectorXd& logits) {
  Eigen::Index best;
  logits.maxCoeff(&best);
  return static_cast<ActionIndex>(best);
}

}  // namespace

std::vector<std::vector<ActionIndex>> sample_gru(const GruModel& model, std::size_t n_sequences, std::size_t max_len,
                                                 double temperature, std::uint64_t seed) {
  if (!(temperature > 0)) throw Error("temperature must be positive");
  if (max_len == 0) throw Error("max_len must be at least 1");
  std::vector<std::vector<ActionIndex>> out(n_sequences);
  const auto n = static_cast<std::ptrdiff_t>(n_sequences);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    Rng rng = make_substream(seed, static_cast<std::uint64_t>(i));
    out[i] = decode(model, max_len, [&](const VectorXd& logits) {
      const double m = logits.maxCoeff();
      VectorXd w = ((logits.array() - m) / temperature).exp().matrix();
      const double u = uniform01(rng) * w.sum();
      double acc = 0.0;
      ActionIndex last_positive = 0;
      for (Eigen::Index k = 0; k < w.size(); ++k) {
        if (w[k] <= 0) continue;
        last_positive = static_cast<ActionIndex>(k);
        acc += w[k];
        if (u < acc) return last_positive;
      }
      return last_positive;
    });
  }
  return out;
}

std::vector<ActionIndex> greedy_decode(const GruModel& model, std::size_t max_len) {
  if (max_len == 0) throw Error("max_len must be at least 1");
  return decode(model, max_len, argmax);
}

}  // namespace edusynth
