// SPDX-License-Identifier: Apache-2.0
//
// Serial reference kernels against their OpenMP counterparts on a synthetic
// corpus. Prints wall time per kernel and whether the outputs agree.
#include <CLI11.hpp>
#include <omp.h>

#include <chrono>
#include <cstdio>

#include "edusynth/drop.hpp"
#include "edusynth/reference.hpp"
#include "edusynth/synthetic.hpp"

using namespace edusynth;

namespace {

template <class F>
double time_best_of(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void row(const char* kernel, double serial, double parallel, bool equal) {
  std::printf("%-20s %12.4f %12.4f %9.2fx %8s\n", kernel, serial, parallel, serial / parallel, equal ? "yes" : "NO");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"edusynth kernel benchmark"};
  std::size_t users = 1000, samples = 20000;
  int reps = 3, threads = 0;
  std::uint64_t seed = 1;
  app.add_option("--users", users, "synthetic users")->capture_default_str();
  app.add_option("--samples", samples, "sequences sampled per run")->capture_default_str();
  app.add_option("--reps", reps, "repetitions, best time reported")->capture_default_str();
  app.add_option("--threads", threads, "OpenMP threads (0 = runtime default)");
  app.add_option("--seed", seed);
  CLI11_PARSE(app, argc, argv);
  if (threads > 0) omp_set_num_threads(threads);

  const auto data = make_synthetic({.users = users, .actions = 50, .seed = seed});
  const auto split = split_half_users(data.corpus, seed);
  const auto fake = drop_and_renumber(split.training, 0.5, seed);
  const auto markov = fit_markov(split.training);
  const auto irt = fit_irt(split.training);
  const auto prior = fit_prior(irt);
  const auto seqs = sample_markov(markov, samples, seed);

  std::printf("users=%zu rows=%zu samples=%zu threads=%d\n", users, data.corpus.size(), samples,
              omp_get_max_threads());
  std::printf("%-20s %12s %12s %10s %8s\n", "kernel", "serial [s]", "parallel [s]", "speedup", "equal");

  std::vector<MatchScore> ms, mp;
  const double m_ser = time_best_of(reps, [&] { ms = reference::match_scores(data.corpus, fake); });
  const double m_par = time_best_of(reps, [&] { mp = match_scores(data.corpus, fake); });
  row("match_scores", m_ser, m_par, ms == mp);

  std::vector<std::vector<ActionIndex>> ss, sp;
  const double s_ser = time_best_of(reps, [&] { ss = reference::sample_markov(markov, samples, seed); });
  const double s_par = time_best_of(reps, [&] { sp = sample_markov(markov, samples, seed); });
  row("sample_markov", s_ser, s_par, ss == sp);

  std::vector<UserSequence> gs, gp;
  const auto& vocab = markov.vocabulary();
  const double g_ser = time_best_of(reps, [&] { gs = reference::generate_outcomes(irt, prior, vocab, seqs, seed); });
  const double g_par = time_best_of(reps, [&] { gp = generate_outcomes(irt, prior, vocab, seqs, seed); });
  row("generate_outcomes", g_ser, g_par, gs == gp);
  return (ms == mp && ss == sp && gs == gp) ? 0 : 1;
}
