#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "grpolab/policy.hpp"
#include "grpolab/rewards.hpp"
#include "grpolab/task.hpp"

namespace grpolab {

enum class RlAlgorithm { grpo, dpa_grpo };

constexpr AccuracyMode accuracy_mode(RlAlgorithm a) {
  return a == RlAlgorithm::grpo ? AccuracyMode::binary : AccuracyMode::dpa;
}

struct TrainConfig {
  RlAlgorithm algorithm = RlAlgorithm::grpo;
  int group_size = 4;
  double kl_beta = 0.04;
  double clip_epsilon = 0.2;
  double learning_rate = 0.02;
  int epochs = 5;
  int batch_size = 8;
  SamplingConfig sampling;
  std::uint64_t seed = 0;

  void validate() const;
};

// One group of sampled responses for a single task, scored under the
// behaviour (old) policy. old_log_probs are full-softmax log-probabilities,
// not truncated sampling ones.
struct GroupRollout {
  std::int64_t task_id = 0;
  std::vector<int> classes;
  std::vector<ParsedResponse> responses;
  std::vector<double> old_log_probs;
  std::vector<RewardBreakdown> rewards;
  std::vector<double> advantages;
};

// Group-normalized advantages: (r - mean) / population std. A flat group
// (std below 1e-8) gets all-zero advantages instead of a blow-up.
std::vector<double> compute_advantages(std::span<const double> rewards);

// k3 estimator of KL(policy || reference) from a single sample:
// rho - log(rho) - 1 with rho = p_ref / p_policy. Always >= 0.
double kl_k3(double logp_policy, double logp_ref);

double importance_weight(double logp_policy, double logp_old);

struct ObjectiveResult {
  double value = 0.0;  // mean surrogate minus beta * KL over the group
  ParamGrad grad;      // ascent direction for `value`
  double mean_kl = 0.0;
  int clipped_samples = 0;  // samples whose selected branch was the clipped one
};

// Clipped surrogate with k3 KL penalty for one group:
//   mean_i [ min(w_i A_i, clip(w_i, 1 - eps, 1 + eps) A_i) - beta kl_i ].
// Ties between branches count as unclipped. The gradient treats
// old_log_probs and advantages as constants.
ObjectiveResult objective_and_grad(const PolicyParams& params,
                                   std::span<const double> features,
                                   const GroupRollout& group,
                                   const PolicyParams& reference,
                                   const TrainConfig& config);

// Samples group_size responses from the behaviour policy's truncated
// action distribution, renders and parses them, scores them under the
// config's accuracy mode, and normalizes advantages within the group.
GroupRollout rollout_group(const PolicyParams& behaviour, const Task& task,
                           const TrainConfig& config, Rng& rng);

struct MetricsRow {
  int epoch = 0;
  int batch = 0;
  double mean_reward = 0.0;
  double mean_format_reward = 0.0;
  double mean_accuracy_reward = 0.0;
  double mean_kl = 0.0;
  double clip_fraction = 0.0;
  double eval_overall = 0.0;
  std::array<double, kDimensionCount> eval_dimensions{};
};

struct MetricsLog {
  std::vector<MetricsRow> rows;

  std::string csv() const;  // header + one row per batch
};

struct TrainResult {
  PolicyParams params;
  MetricsLog metrics;
};

// Runs the epoch plan: per batch, snapshot the behaviour policy, roll out
// every task's group, take one ascent step on the batch-mean objective
// against the frozen initial reference, then score the testing split for
// the metrics row. Rollout randomness is keyed on (seed, epoch, position,
// task id), so repeated tasks inside an epoch get independent draws.
TrainResult train(const DatasetSplits& splits, PolicyParams initial,
                  const TrainConfig& config,
                  std::span<const std::vector<Task>> epoch_plan);

}  // namespace grpolab
