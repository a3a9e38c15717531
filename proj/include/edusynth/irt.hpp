// SPDX-License-Identifier: Apache-2.0
//
// Rasch response model: Pr(r = 1 | user, action) = sigmoid(theta_user - d_action).
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "edusynth/corpus.hpp"

namespace edusynth {

double sigmoid(double x) noexcept;
/// log(1 + exp(x)) without overflow.
double softplus(double x) noexcept;

/// L2-regularized Rasch negative log-likelihood
///
///   sum_records softplus(z) - r z  +  |w|^2 / (2 C),   z = theta_u - d_a
///
/// over w = (theta, d). Users are laid out in a canonical order (sorted by
/// sequence content) and actions in vocabulary order, restricted to actions
/// with at least one attempt. The canonical layout makes the fit independent
/// of user ids and user order, bit for bit.
class RaschObjective {
 public:
  RaschObjective(const Corpus& corpus, double reg_strength);

  std::size_t dimension() const noexcept { return num_users_ + fitted_actions_.size(); }
  std::size_t num_users() const noexcept { return num_users_; }
  /// Corpus user index of canonical slot k.
  const std::vector<std::size_t>& user_order() const noexcept { return user_order_; }
  /// Vocabulary index of each difficulty parameter.
  const std::vector<ActionIndex>& fitted_actions() const noexcept { return fitted_actions_; }

  double value(std::span<const double> w) const;
  double value_and_gradient(std::span<const double> w, std::span<double> grad) const;
  /// Stores per-record curvature p(1-p) at `w` for subsequent products.
  void set_curvature_point(std::span<const double> w);
  /// out = H(w_curv) v, plus the diagonal of H in `diag` when non-empty.
  void hessian_vector(std::span<const double> v, std::span<double> out) const;
  void hessian_diagonal(std::span<double> diag) const;

 private:
  double inv_c_;
  std::size_t num_users_ = 0;
  std::vector<std::size_t> user_order_;
  std::vector<ActionIndex> fitted_actions_;
  // Flattened records, canonical user order then sequence order.
  std::vector<std::uint32_t> rec_user_;
  std::vector<std::uint32_t> rec_param_;
  std::vector<std::uint8_t> rec_outcome_;
  std::vector<double> curvature_;
};

struct IrtFitOptions {
  double reg_strength = 1.0;
  double gradient_tolerance = 1e-6;
  int max_iterations = 1000;
  /// Starting point in RaschObjective layout; zeros when absent.
  std::optional<std::vector<double>> initial;
};

struct IrtFitReport {
  int iterations = 0;
  double objective = 0.0;
  double gradient_norm = 0.0;
  bool converged = false;
};

/// Fitted abilities and difficulties, keyed by opaque ids.
class IrtModel {
 public:
  IrtModel() = default;
  IrtModel(double reg_strength, std::map<std::string, double> theta, std::map<std::string, double> difficulty);

  double reg_strength() const noexcept { return reg_strength_; }
  const std::map<std::string, double>& theta() const noexcept { return theta_; }
  const std::map<std::string, double>& difficulty() const noexcept { return difficulty_; }

  std::optional<double> find_difficulty(std::string_view action) const;

  /// sigmoid(theta - d_action); throws for an unknown action.
  double predict(double theta, std::string_view action) const;

  /// Difficulty per vocabulary index (nullopt for actions without one).
  std::vector<std::optional<double>> difficulties_for(const Vocabulary& vocab) const;

  bool operator==(const IrtModel&) const = default;

 private:
  double reg_strength_ = 1.0;
  std::map<std::string, double> theta_;
  std::map<std::string, double> difficulty_;
};

/// Newton-CG minimisation of RaschObjective. On hitting the iteration cap
/// the last iterate is returned with a warning on stderr.
IrtModel fit_irt(const Corpus& corpus, const IrtFitOptions& options = {}, IrtFitReport* report = nullptr);

struct AbilityPrior {
  double mu = 0.0;
  double sigma = 1.0;
  bool operator==(const AbilityPrior&) const = default;
};

inline constexpr double kMinPriorSigma = 1e-6;

/// Gaussian fit to the abilities: sample mean and population standard
/// deviation (floored at kMinPriorSigma).
AbilityPrior fit_prior(const IrtModel& model);

/// One fake user per action sequence: theta ~ N(mu, sigma^2), each outcome
/// ~ Bernoulli(sigmoid(theta - d)). Sequence i draws from substream (seed, i),
/// so results do not depend on the number of threads. User ids are
/// "<id_prefix><i>" zero-padded to six digits.
std::vector<UserSequence> generate_outcomes(const IrtModel& model, const AbilityPrior& prior,
                                            const Vocabulary& vocab,
                                            const std::vector<std::vector<ActionIndex>>& action_sequences,
                                            std::uint64_t seed, std::string_view id_prefix = "fake-");

std::string fake_user_id(std::string_view prefix, std::size_t index);

}  // namespace edusynth
