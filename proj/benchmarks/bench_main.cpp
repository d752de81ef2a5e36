// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "oncoalign/coldstart.hpp"
#include "oncoalign/grpo.hpp"
#include "oncoalign/metrics.hpp"
#include "oncoalign/random.hpp"
#include "oncoalign/reward.hpp"
#include "oncoalign/toy_env.hpp"

using namespace oncoalign;

namespace {

const char* kTrace =
    "<reasoning>\nStep 1: The patient has stage 4 disease with metastases to bone and liver.\n"
    "Step 2: Treatment included chemotherapy and radiation.\nStep 3: Markers are rising.\n</reasoning>\n"
    "<comment>\nPoor prognosis.\n</comment>\n"
    "<prediction>\n(survival status) 1:DECEASED\n(survival months) 27.9\n</prediction>";

void BM_TotalReward(benchmark::State& state) {
  const SurvivalOutcome truth{SurvivalStatus::Deceased, 27.9};
  RewardConfig cfg;
  cfg.integer_policy = IntegerPolicy::AnyFiniteNumeric;
  for (auto _ : state) benchmark::DoNotOptimize(total_reward(kTrace, truth, cfg));
}
BENCHMARK(BM_TotalReward);

void BM_EvaluateObjective(benchmark::State& state) {
  const FormattedAnswerEnv env;
  Rng rng(7);
  auto policy = ToyPolicy::random(env.vocab_size(), FormattedAnswerEnv::kAnswerLength, ContextMode::PositionOnly, rng);
  std::vector<GroupOutput> outs;
  for (int i = 0; i < state.range(0); ++i) {
    GroupOutput o;
    o.tokens = policy.sample(rng);
    o.logp_old = policy.token_log_probs(o.tokens);
    o.logp_ref = o.logp_old;
    o.logp_current = o.logp_old;
    o.reward = env.reward(o.tokens);
    outs.push_back(o);
  }
  GrpoGroup group("bench", outs);
  group.compute_advantages();
  const GrpoConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_objective(policy, group, cfg));
}
BENCHMARK(BM_EvaluateObjective)->Arg(8)->Arg(64);

void BM_KMeans(benchmark::State& state) {
  Rng rng(3);
  EmbeddedCorpus c;
  for (int i = 0; i < state.range(0); ++i) {
    c.ids.push_back("p" + std::to_string(i));
    Vector v(32);
    for (double& x : v) x = standard_normal(rng);
    c.vectors.push_back(v);
  }
  const auto k = default_cluster_count(c.size());
  for (auto _ : state) benchmark::DoNotOptimize(kmeans(c, k, 50, 42));
}
BENCHMARK(BM_KMeans)->Arg(200)->Arg(1000);

void BM_CorpusBleu(benchmark::State& state) {
  Rng rng(5);
  const std::vector<std::string> words{"the", "patient", "stage", "tumor", "therapy", "rising", "marker", "survival"};
  std::vector<std::string> cands, refs;
  for (int i = 0; i < state.range(0); ++i) {
    std::string c, r;
    for (int t = 0; t < 30; ++t) {
      c += words[uniform_index(rng, words.size())] + " ";
      r += words[uniform_index(rng, words.size())] + " ";
    }
    cands.push_back(c);
    refs.push_back(r);
  }
  for (auto _ : state) benchmark::DoNotOptimize(bleu(cands, refs));
}
BENCHMARK(BM_CorpusBleu)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
