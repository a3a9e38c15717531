// SPDX-License-Identifier: Apache-2.0
//
// Independent reference computations used only by the tests. None of these
// share code with the library; they are deliberately slow and literal.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "edusynth/gru.hpp"

namespace oracle {

// Exponential recursion straight from the LCS definition.
inline std::size_t lcs(const std::vector<int>& a, const std::vector<int>& b, std::size_t i = 0, std::size_t j = 0) {
  if (i == a.size() || j == b.size()) return 0;
  if (a[i] == b[j]) return 1 + lcs(a, b, i + 1, j + 1);
  return std::max(lcs(a, b, i + 1, j), lcs(a, b, i, j + 1));
}

// Probability that a random positive outranks a random negative, ties count one half.
inline double auc_pairs(const std::vector<double>& scores, const std::vector<int>& labels) {
  double wins = 0.0;
  std::size_t pos = 0, neg = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] == 1) ++pos; else ++neg;
  }
  if (pos == 0 || neg == 0) return 0.5;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] == 1) continue;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / (static_cast<double>(pos) * static_cast<double>(neg));
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct ScalarGruTrace {
  std::vector<std::vector<double>> hidden;
  std::vector<std::vector<double>> probs;
};

// Step-by-step GRU with explicit loops over scalars, no Eigen arithmetic.
// Reads the parameters element-wise and follows the textbook equations:
//   r = sig(Wr x + Ur h + br), z = sig(Wz x + Uz h + bz),
//   c = tanh(Wc x + Uc (r*h) + bc), h' = (1 - z) h + z c, y = softmax(Wo h' + bo).
inline ScalarGruTrace scalar_gru(const edusynth::GruParameters& p, const std::vector<int>& tokens) {
  const auto H = static_cast<std::size_t>(p.b_reset.size());
  const auto O = static_cast<std::size_t>(p.b_out.size());
  std::vector<double> h(H, 0.0);
  ScalarGruTrace trace;
  auto affine = [&](const Eigen::MatrixXd& W, const std::vector<double>& x, const Eigen::MatrixXd& U,
                    const std::vector<double>& hv, const Eigen::VectorXd& b, std::size_t row) {
    double s = b(static_cast<Eigen::Index>(row));
    for (std::size_t k = 0; k < x.size(); ++k) s += W(row, k) * x[k];
    for (std::size_t k = 0; k < hv.size(); ++k) s += U(row, k) * hv[k];
    return s;
  };
  for (int tok : tokens) {
    std::vector<double> x(H);
    for (std::size_t k = 0; k < H; ++k) x[k] = p.embedding(k, tok);
    std::vector<double> r(H), z(H), rh(H), c(H), hn(H);
    for (std::size_t i = 0; i < H; ++i) {
      r[i] = sigmoid(affine(p.w_reset, x, p.u_reset, h, p.b_reset, i));
      z[i] = sigmoid(affine(p.w_update, x, p.u_update, h, p.b_update, i));
    }
    for (std::size_t i = 0; i < H; ++i) rh[i] = r[i] * h[i];
    for (std::size_t i = 0; i < H; ++i) c[i] = std::tanh(affine(p.w_cand, x, p.u_cand, rh, p.b_cand, i));
    for (std::size_t i = 0; i < H; ++i) hn[i] = (1.0 - z[i]) * h[i] + z[i] * c[i];
    h = hn;
    std::vector<double> logits(O);
    double mx = -1e300;
    for (std::size_t o = 0; o < O; ++o) {
      double s = p.b_out(static_cast<Eigen::Index>(o));
      for (std::size_t k = 0; k < H; ++k) s += p.w_out(o, k) * h[k];
      logits[o] = s;
      mx = std::max(mx, s);
    }
    double total = 0.0;
    for (auto& l : logits) total += (l = std::exp(l - mx));
    for (auto& l : logits) l /= total;
    trace.hidden.push_back(h);
    trace.probs.push_back(logits);
  }
  return trace;
}

// Mean next-symbol cross-entropy of one sequence with start and STOP added.
inline double scalar_gru_loss(const edusynth::GruParameters& p, const std::vector<int>& seq, int boundary) {
  std::vector<int> inputs{boundary};
  inputs.insert(inputs.end(), seq.begin(), seq.end());
  const auto trace = scalar_gru(p, inputs);
  double loss = 0.0;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    const int target = t < seq.size() ? seq[t] : boundary;
    loss -= std::log(trace.probs[t][static_cast<std::size_t>(target)]);
  }
  return loss / static_cast<double>(inputs.size());
}

// Groups (user, action, outcome) rows by user in first-seen order.
struct Row {
  std::string user, action;
  int outcome;
};
inline std::vector<std::pair<std::string, std::vector<Row>>> group_rows(const std::vector<Row>& rows) {
  std::vector<std::pair<std::string, std::vector<Row>>> out;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& g) { return g.first == r.user; });
    if (it == out.end()) out.push_back({r.user, {r}});
    else it->second.push_back(r);
  }
  return out;
}

// Lower median: element at index (n-1)/2 of the sorted values.
inline std::size_t lower_median(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  return v[(v.size() - 1) / 2];
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) { mx += x[i]; my += y[i]; }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace oracle
