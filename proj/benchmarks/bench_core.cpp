#include <benchmark/benchmark.h>

#include <vector>

#include "grpolab/dataset.hpp"
#include "grpolab/eval.hpp"
#include "grpolab/grpo.hpp"
#include "grpolab/policy.hpp"
#include "grpolab/response.hpp"
#include "grpolab/rewards.hpp"

using namespace grpolab;

namespace {

constexpr int kDim = 8;

PolicyParams bench_params(std::uint64_t seed = 1) {
  Rng rng(seed);
  PolicyParams p = PolicyParams::zeros(kDim);
  for (double& w : p.weights) w = 0.5 * rng.normal();
  for (double& b : p.bias) b = 0.5 * rng.normal();
  return p;
}

Task bench_task(std::uint64_t seed = 2) {
  Rng rng(seed);
  Task t;
  t.id = 0;
  t.features.resize(kDim);
  for (double& v : t.features) v = rng.normal();
  t.answer = *AnswerSet::parse("ACD");
  t.split = Split::training;
  return t;
}

void bm_parse_response(benchmark::State& state) {
  const std::string text =
      "<think>edge halo and shadow direction disagree</think>"
      "<answer>ACD</answer>";
  for (auto _ : state) {
    benchmark::DoNotOptimize(parse_response(text));
  }
}
BENCHMARK(bm_parse_response);

void bm_dpa_reward_grid(benchmark::State& state) {
  std::vector<ParsedResponse> responses;
  for (int r = 0; r < AnswerSet::kClassCount; ++r) {
    responses.push_back(parse_response(render_response(r, "")));
  }
  for (auto _ : state) {
    double acc = 0.0;
    for (const ParsedResponse& resp : responses) {
      for (int a = 0; a < AnswerSet::kClassCount; ++a) {
        acc += dpa_reward(resp, AnswerSet::from_class(a));
      }
    }
    benchmark::DoNotOptimize(acc);
  }
}
BENCHMARK(bm_dpa_reward_grid);

void bm_action_distribution(benchmark::State& state) {
  PolicyParams p = bench_params();
  Task t = bench_task();
  auto logit_values = logits(p, t.features);
  SamplingConfig sampling;
  for (auto _ : state) {
    benchmark::DoNotOptimize(action_distribution(logit_values, sampling));
  }
}
BENCHMARK(bm_action_distribution);

void bm_log_prob_grad(benchmark::State& state) {
  PolicyParams p = bench_params();
  Task t = bench_task();
  for (auto _ : state) {
    benchmark::DoNotOptimize(log_prob_grad(p, t.features, 6));
  }
}
BENCHMARK(bm_log_prob_grad);

void bm_rollout_group(benchmark::State& state) {
  PolicyParams p = bench_params();
  Task t = bench_task();
  TrainConfig cfg;
  Rng rng(3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rollout_group(p, t, cfg, rng));
  }
}
BENCHMARK(bm_rollout_group);

void bm_objective_and_grad(benchmark::State& state) {
  PolicyParams p = bench_params(4);
  PolicyParams ref = bench_params(5);
  Task t = bench_task();
  TrainConfig cfg;
  Rng rng(6);
  GroupRollout group = rollout_group(p, t, cfg, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(objective_and_grad(p, t.features, group, ref, cfg));
  }
}
BENCHMARK(bm_objective_and_grad);

void bm_evaluate_testing_split(benchmark::State& state) {
  GenConfig gen;
  gen.exploration_size = 0;
  DatasetSplits splits = generate_dataset(gen, 7);
  PolicyParams p = bench_params(8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate(p, splits.testing));
  }
}
BENCHMARK(bm_evaluate_testing_split);

void bm_generate_reference_dataset(benchmark::State& state) {
  GenConfig gen;
  std::uint64_t seed = 9;
  for (auto _ : state) {
    benchmark::DoNotOptimize(generate_dataset(gen, seed++));
  }
}
BENCHMARK(bm_generate_reference_dataset)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
