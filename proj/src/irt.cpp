// SPDX-License-Identifier: Apache-2.0
#include "edusynth/irt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numeric>

#include "edusynth/error.hpp"
#include "edusynth/rng.hpp"

namespace edusynth {

double sigmoid(double x) noexcept {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) noexcept {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

RaschObjective::RaschObjective(const Corpus& corpus, double reg_strength) {
  if (!(reg_strength > 0)) throw Error("regularization strength must be positive");
  inv_c_ = 1.0 / reg_strength;
  num_users_ = corpus.num_users();

  // Users and actions are ordered by action names, never by vocabulary index,
  // so the fit is bit-identical under any relabelling of rows or vocabulary.
  const auto& seqs = corpus.sequences();
  const std::size_t n_actions = corpus.num_actions();
  std::vector<ActionIndex> by_name(n_actions);
  std::iota(by_name.begin(), by_name.end(), 0);
  std::sort(by_name.begin(), by_name.end(), [&](ActionIndex a, ActionIndex b) {
    return corpus.vocabulary().name(a) < corpus.vocabulary().name(b);
  });
  std::vector<ActionIndex> rank(n_actions);
  for (std::size_t i = 0; i < n_actions; ++i) rank[static_cast<std::size_t>(by_name[i])] = static_cast<ActionIndex>(i);
  std::vector<std::vector<ActionIndex>> ranked(num_users_);
  for (std::size_t u = 0; u < num_users_; ++u)
    for (ActionIndex a : seqs[u].actions) ranked[u].push_back(rank[static_cast<std::size_t>(a)]);

  user_order_.resize(num_users_);
  std::iota(user_order_.begin(), user_order_.end(), 0);
  std::stable_sort(user_order_.begin(), user_order_.end(), [&](std::size_t a, std::size_t b) {
    if (ranked[a] != ranked[b]) return ranked[a] < ranked[b];
    return seqs[a].outcomes < seqs[b].outcomes;
  });

  std::vector<std::uint32_t> param_of(n_actions, 0);
  for (ActionIndex a : by_name) {
    if (corpus.attempts(a) == 0) continue;
    param_of[static_cast<std::size_t>(a)] = static_cast<std::uint32_t>(num_users_ + fitted_actions_.size());
    fitted_actions_.push_back(a);
  }

  rec_user_.reserve(corpus.size());
  rec_param_.reserve(corpus.size());
  rec_outcome_.reserve(corpus.size());
  for (std::size_t k = 0; k < num_users_; ++k) {
    const auto& s = seqs[user_order_[k]];
    for (std::size_t t = 0; t < s.size(); ++t) {
      rec_user_.push_back(static_cast<std::uint32_t>(k));
      rec_param_.push_back(param_of[s.actions[t]]);
      rec_outcome_.push_back(s.outcomes[t]);
    }
  }
}

double RaschObjective::value(std::span<const double> w) const {
  double loss = 0.0;
  for (std::size_t r = 0; r < rec_user_.size(); ++r) {
    const double z = w[rec_user_[r]] - w[rec_param_[r]];
    loss += softplus(z) - (rec_outcome_[r] ? z : 0.0);
  }
  double sq = 0.0;
  for (double x : w) sq += x * x;
  return loss + 0.5 * inv_c_ * sq;
}

double RaschObjective::value_and_gradient(std::span<const double> w, std::span<double> grad) const {
  double loss = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) grad[i] = inv_c_ * w[i];
  for (std::size_t r = 0; r < rec_user_.size(); ++r) {
    const double z = w[rec_user_[r]] - w[rec_param_[r]];
    loss += softplus(z) - (rec_outcome_[r] ? z : 0.0);
    const double dz = sigmoid(z) - rec_outcome_[r];
    grad[rec_user_[r]] += dz;
    grad[rec_param_[r]] -= dz;
  }
  double sq = 0.0;
  for (double x : w) sq += x * x;
  return loss + 0.5 * inv_c_ * sq;
}

void RaschObjective::set_curvature_point(std::span<const double> w) {
  curvature_.resize(rec_user_.size());
  for (std::size_t r = 0; r < rec_user_.size(); ++r) {
    const double p = sigmoid(w[rec_user_[r]] - w[rec_param_[r]]);
    curvature_[r] = p * (1.0 - p);
  }
}

void RaschObjective::hessian_vector(std::span<const double> v, std::span<double> out) const {
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = inv_c_ * v[i];
  for (std::size_t r = 0; r < rec_user_.size(); ++r) {
    const double h = curvature_[r] * (v[rec_user_[r]] - v[rec_param_[r]]);
    out[rec_user_[r]] += h;
    out[rec_param_[r]] -= h;
  }
}

void RaschObjective::hessian_diagonal(std::span<double> diag) const {
  std::fill(diag.begin(), diag.end(), inv_c_);
  for (std::size_t r = 0; r < rec_user_.size(); ++r) {
    diag[rec_user_[r]] += curvature_[r];
    diag[rec_param_[r]] += curvature_[r];
  }
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// Preconditioned conjugate gradient for H p = -g.
void newton_direction(const RaschObjective& obj, std::span<const double> g, std::span<double> p) {
  const std::size_t n = g.size();
  std::vector<double> diag(n), r(n), z(n), d(n), hd(n);
  obj.hessian_diagonal(diag);
  std::fill(p.begin(), p.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    r[i] = -g[i];
    z[i] = r[i] / diag[i];
    d[i] = z[i];
  }
  const double gnorm = norm(g);
  const double tol = std::min(0.1, std::sqrt(gnorm)) * gnorm;
  double rz = dot(r, z);
  for (int it = 0; it < 500 && norm(r) > tol; ++it) {
    obj.hessian_vector(d, hd);
    const double alpha = rz / dot(d, hd);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] += alpha * d[i];
      r[i] -= alpha * hd[i];
      z[i] = r[i] / diag[i];
    }
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) d[i] = z[i] + beta * d[i];
  }
}

}  // namespace

IrtModel::IrtModel(double reg_strength, std::map<std::string, double> theta,
                   std::map<std::string, double> difficulty)
    : reg_strength_(reg_strength), theta_(std::move(theta)), difficulty_(std::move(difficulty)) {}

std::optional<double> IrtModel::find_difficulty(std::string_view action) const {
  auto it = difficulty_.find(std::string(action));
  if (it == difficulty_.end()) return std::nullopt;
  return it->second;
}

double IrtModel::predict(double theta, std::string_view action) const {
  const auto d = find_difficulty(action);
  if (!d) throw Error("unknown action '" + std::string(action) + "'");
  return sigmoid(theta - *d);
}

std::vector<std::optional<double>> IrtModel::difficulties_for(const Vocabulary& vocab) const {
  std::vector<std::optional<double>> out(vocab.size());
  for (std::size_t a = 0; a < vocab.size(); ++a) out[a] = find_difficulty(vocab.name(static_cast<ActionIndex>(a)));
  return out;
}

IrtModel fit_irt(const Corpus& corpus, const IrtFitOptions& options, IrtFitReport* report) {
  if (corpus.empty()) throw Error("cannot fit IRT on an empty corpus");
  RaschObjective obj(corpus, options.reg_strength);
  const std::size_t n = obj.dimension();

  std::vector<double> w(n, 0.0);
  if (options.initial) {
    if (options.initial->size() != n) throw Error("initial point has wrong dimension");
    w = *options.initial;
  }
  std::vector<double> g(n), p(n), trial(n), g_trial(n);
  double f = obj.value_and_gradient(w, g);
  double gnorm = norm(g);
  int iter = 0;
  for (; iter < options.max_iterations && gnorm > options.gradient_tolerance; ++iter) {
    obj.set_curvature_point(w);
    newton_direction(obj, g, p);
    double slope0 = dot(g, p);
    if (!(slope0 < 0)) {
      // Fall back to steepest descent if CG produced a non-descent direction.
      for (std::size_t i = 0; i < n; ++i) p[i] = -g[i];
      slope0 = -gnorm * gnorm;
    }

    // Line search on phi'(alpha) = g(w + alpha p) . p, which stays accurate
    // after objective differences drop below rounding.
    auto eval = [&](double alpha) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = w[i] + alpha * p[i];
      const double ft = obj.value_and_gradient(trial, g_trial);
      return std::pair{ft, dot(g_trial, p)};
    };
    constexpr double kEta = 0.5;
    double lo = 0.0, lo_slope = slope0;
    double hi = -1.0, hi_slope = 0.0;
    double alpha = 1.0;
    double f_new = f;
    for (int ls = 0; ls < 60; ++ls) {
      const auto [ft, slope] = eval(alpha);
      f_new = ft;
      if (std::abs(slope) <= kEta * std::abs(slope0) && std::isfinite(ft)) break;
      if (slope < 0 && std::isfinite(ft)) {
        lo = alpha;
        lo_slope = slope;
      } else {
        hi = alpha;
        hi_slope = std::isfinite(slope) ? slope : 0.0;
      }
      if (hi < 0) {
        alpha *= 2.0;
      } else if (hi_slope > 0 && lo_slope < 0) {
        // Secant step on the monotone derivative, kept inside the bracket.
        const double s = lo - lo_slope * (hi - lo) / (hi_slope - lo_slope);
        const double width = hi - lo;
        alpha = std::clamp(s, lo + 0.1 * width, hi - 0.1 * width);
      } else {
        alpha = 0.5 * (lo + hi);
      }
    }
    w.swap(trial);
    g.swap(g_trial);
    f = f_new;
    gnorm = norm(g);
  }

  const bool converged = gnorm <= options.gradient_tolerance;
  if (!converged) {
    std::cerr << "warning: IRT fit stopped after " << iter << " iterations with gradient norm " << gnorm << '\n';
  }
  if (report) *report = {iter, f, gnorm, converged};

  std::map<std::string, double> theta;
  std::map<std::string, double> diff;
  const auto& seqs = corpus.sequences();
  for (std::size_t k = 0; k < obj.num_users(); ++k) theta[seqs[obj.user_order()[k]].user_id] = w[k];
  for (std::size_t j = 0; j < obj.fitted_actions().size(); ++j)
    diff[corpus.vocabulary().name(obj.fitted_actions()[j])] = w[obj.num_users() + j];
  return IrtModel(options.reg_strength, std::move(theta), std::move(diff));
}

AbilityPrior fit_prior(const IrtModel& model) {
  const auto& theta = model.theta();
  if (theta.size() < 2) throw Error("ability prior needs at least 2 users");
  double mean = 0.0;
  for (const auto& [_, v] : theta) mean += v;
  mean /= static_cast<double>(theta.size());
  double var = 0.0;
  for (const auto& [_, v] : theta) var += (v - mean) * (v - mean);
  var /= static_cast<double>(theta.size());
  return {mean, std::max(std::sqrt(var), kMinPriorSigma)};
}

std::string fake_user_id(std::string_view prefix, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", index);
  return std::string(prefix) + buf;
}

std::vector<UserSequence> generate_outcomes(const IrtModel& model, const AbilityPrior& prior,
                                            const Vocabulary& vocab,
                                            const std::vector<std::vector<ActionIndex>>& action_sequences,
                                            std::uint64_t seed, std::string_view id_prefix) {
  if (!(prior.sigma > 0)) throw Error("prior sigma must be positive");
  const auto lookup = model.difficulties_for(vocab);
  for (const auto& seq : action_sequences) {
    for (ActionIndex a : seq) {
      if (a < 0 || static_cast<std::size_t>(a) >= lookup.size()) throw Error("action index out of range");
      if (!lookup[a]) throw Error("unknown action '" + vocab.name(a) + "'");
    }
  }

  const auto n = static_cast<std::ptrdiff_t>(action_sequences.size());
  std::vector<UserSequence> out(action_sequences.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    Rng rng = make_substream(seed, static_cast<std::uint64_t>(i));
    const double theta = prior.mu + prior.sigma * std::normal_distribution<double>(0.0, 1.0)(rng);
    const auto& actions = action_sequences[i];
    UserSequence s{fake_user_id(id_prefix, static_cast<std::size_t>(i)), actions, {}};
    s.outcomes.resize(actions.size());
    for (std::size_t t = 0; t < actions.size(); ++t) {
      s.outcomes[t] = uniform01(rng) < sigmoid(theta - *lookup[actions[t]]) ? 1 : 0;
    }
    out[i] = std::move(s);
  }
  return out;
}

}  // namespace edusynth
