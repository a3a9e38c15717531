// SPDX-License-Identifier: Apache-2.0
//
// GRU next-action model. Symbols 0..V-1 are actions; output slot V is STOP
// and input slot V is the start context.
//
//   s_t = sigmoid(W_r x_t + U_r h_{t-1} + b_r)          reset gate
//   z_t = sigmoid(W_z x_t + U_z h_{t-1} + b_z)          update gate
//   c_t = tanh(W_c x_t + U_c (s_t * h_{t-1}) + b_c)     candidate
//   h_t = (1 - z_t) * h_{t-1} + z_t * c_t,   h_0 = 0
//   y_t = softmax(W_o h_t + b_o)                        over V + 1 symbols
//
// with x_t the embedding column of the input symbol.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "edusynth/corpus.hpp"

namespace edusynth {

struct GruParameters {
  Eigen::MatrixXd embedding;  ///< H x (V+1), column V is the start context
  Eigen::MatrixXd w_reset, u_reset;
  Eigen::VectorXd b_reset;
  Eigen::MatrixXd w_update, u_update;
  Eigen::VectorXd b_update;
  Eigen::MatrixXd w_cand, u_cand;
  Eigen::VectorXd b_cand;
  Eigen::MatrixXd w_out;  ///< (V+1) x H
  Eigen::VectorXd b_out;

  GruParameters() = default;
  GruParameters(std::size_t vocab_size, std::size_t hidden_size);  ///< all zeros

  /// Calls f(name, flat view) for every tensor in a fixed order.
  template <class F>
  void visit(F&& f) {
    auto flat = [](auto& m) { return Eigen::Map<Eigen::VectorXd>(m.data(), m.size()); };
    f("embedding", flat(embedding));
    f("w_reset", flat(w_reset));
    f("u_reset", flat(u_reset));
    f("b_reset", flat(b_reset));
    f("w_update", flat(w_update));
    f("u_update", flat(u_update));
    f("b_update", flat(b_update));
    f("w_cand", flat(w_cand));
    f("u_cand", flat(u_cand));
    f("b_cand", flat(b_cand));
    f("w_out", flat(w_out));
    f("b_out", flat(b_out));
  }
  template <class F>
  void visit(F&& f) const {
    const_cast<GruParameters*>(this)->visit([&](const char* name, Eigen::Map<Eigen::VectorXd> v) {
      f(name, Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()));
    });
  }

  std::size_t parameter_count() const;
  bool all_finite() const;
};

class GruModel {
 public:
  GruModel() = default;
  /// Zero-initialised model over `vocabulary`.
  GruModel(Vocabulary vocabulary, std::size_t hidden_size);

  /// PyTorch-style init: weights/biases U(-1/sqrt(H), 1/sqrt(H)) scaled by
  /// `scale`, embeddings N(0, scale^2).
  static GruModel random(Vocabulary vocabulary, std::size_t hidden_size, std::uint64_t seed, double scale = 1.0);

  const Vocabulary& vocabulary() const noexcept { return vocabulary_; }
  std::size_t vocab_size() const noexcept { return vocabulary_.size(); }
  std::size_t hidden_size() const noexcept { return hidden_size_; }
  ActionIndex stop_symbol() const noexcept { return static_cast<ActionIndex>(vocabulary_.size()); }
  ActionIndex start_symbol() const noexcept { return static_cast<ActionIndex>(vocabulary_.size()); }

  GruParameters& params() noexcept { return params_; }
  const GruParameters& params() const noexcept { return params_; }

  // Training hyperparameters recorded with the model.
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;

 private:
  Vocabulary vocabulary_;
  std::size_t hidden_size_ = 0;
  GruParameters params_;
};

struct GruForward {
  std::vector<Eigen::VectorXd> hidden;         ///< h_1..h_T
  std::vector<Eigen::VectorXd> probabilities;  ///< y_1..y_T, each of size V+1
};

/// Runs the recurrence over `actions` (each < V) from h_0 = 0.
GruForward gru_forward(const GruModel& model, std::span<const ActionIndex> actions);

/// Same recurrence for several sequences at once (lengths may differ).
std::vector<GruForward> gru_forward_batch(const GruModel& model, const std::vector<std::vector<ActionIndex>>& sequences);

/// Mean next-symbol cross-entropy of a batch of equal-length sequences, with
/// the start context prepended to the inputs and STOP appended to the
/// targets. Adds the gradient of that mean into `grad` when non-null.
double gru_batch_loss(const GruModel& model, const std::vector<const std::vector<ActionIndex>*>& batch,
                      GruParameters* grad);

/// Mean per-token loss over the whole corpus (any lengths).
double gru_corpus_loss(const GruModel& model, const Corpus& corpus);

struct GruTrainOptions {
  std::size_t hidden_size = 64;
  std::size_t batch_size = 64;
  std::size_t epochs = 20;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Global gradient-norm clip; 0 disables.
  double clip_norm = 5.0;
  std::uint64_t seed = 0;
  std::function<void(std::size_t epoch, double mean_loss)> on_epoch;
};

struct GruTrainReport {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> epoch_losses;  ///< mean batch loss seen during each epoch
  std::size_t steps = 0;
};

/// Adam on mini-batches of equal-length sequences, visited shortest first.
/// Throws if the loss becomes non-finite.
GruModel train_gru(const Corpus& corpus, const GruTrainOptions& options = {}, GruTrainReport* report = nullptr);

/// Sequences start from the start context; STOP is excluded at the first
/// step so no sequence is empty. Draws from softmax(logits / temperature)
/// until STOP or `max_len` symbols.
std::vector<std::vector<ActionIndex>> sample_gru(const GruModel& model, std::size_t n_sequences, std::size_t max_len,
                                                 double temperature, std::uint64_t seed);

/// Argmax decoding with the same first-step rule as sample_gru.
std::vector<ActionIndex> greedy_decode(const GruModel& model, std::size_t max_len);

}  // namespace edusynth
