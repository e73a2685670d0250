#include "grpolab/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "grpolab/eval.hpp"
#include "grpolab/format.hpp"
#include "grpolab/response.hpp"

namespace grpolab {

void TrainConfig::validate() const {
  if (group_size < 2) {
    throw std::invalid_argument("train: group_size must be >= 2");
  }
  if (kl_beta < 0.0) throw std::invalid_argument("train: kl_beta must be >= 0");
  if (!(clip_epsilon > 0.0) || clip_epsilon >= 1.0) {
    throw std::invalid_argument("train: clip_epsilon must be in (0, 1)");
  }
  if (!(learning_rate > 0.0)) {
    throw std::invalid_argument("train: learning rate must be positive");
  }
  if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  sampling.validate();
}

std::vector<double> compute_advantages(std::span<const double> rewards) {
  if (rewards.size() < 2) {
    throw std::invalid_argument("advantages: need at least 2 rewards");
  }
  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  double std_dev = std::sqrt(var / n);
  std::vector<double> out(rewards.size(), 0.0);
  if (std_dev < 1e-8) return out;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    out[i] = (rewards[i] - mean) / std_dev;
  }
  return out;
}

double kl_k3(double logp_policy, double logp_ref) {
  double delta = logp_ref - logp_policy;  // log rho
  return std::expm1(delta) - delta;       // rho - 1 - log rho
}

double importance_weight(double logp_policy, double logp_old) {
  return std::exp(logp_policy - logp_old);
}

ObjectiveResult objective_and_grad(const PolicyParams& params,
                                   std::span<const double> features,
                                   const GroupRollout& group,
                                   const PolicyParams& reference,
                                   const TrainConfig& config) {
  const std::size_t g = group.classes.size();
  if (g == 0 || group.old_log_probs.size() != g ||
      group.advantages.size() != g) {
    throw std::invalid_argument("objective: inconsistent group");
  }

  auto log_probs = log_softmax(logits(params, features));
  auto ref_log_probs = log_softmax(logits(reference, features));
  std::vector<double> probs(log_probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) probs[i] = std::exp(log_probs[i]);

  ObjectiveResult out;
  out.grad = ParamGrad::zeros(params.feature_dim);
  const int d = params.feature_dim;
  const double lo = 1.0 - config.clip_epsilon;
  const double hi = 1.0 + config.clip_epsilon;

  for (std::size_t i = 0; i < g; ++i) {
    const int cls = group.classes[i];
    if (cls < 0 || cls >= kResponseClassCount) {
      throw std::invalid_argument("objective: class out of range");
    }
    const double advantage = group.advantages[i];
    const double w = importance_weight(log_probs[cls], group.old_log_probs[i]);
    const double unclipped = w * advantage;
    const double clipped = std::clamp(w, lo, hi) * advantage;

    // coefficient multiplying grad log pi for this sample
    double coeff = 0.0;
    if (unclipped <= clipped) {
      coeff += unclipped;  // surrogate gradient flows only through this branch
    } else {
      out.clipped_samples += 1;
    }

    const double delta = ref_log_probs[cls] - log_probs[cls];
    const double kl = std::expm1(delta) - delta;
    coeff += config.kl_beta * std::expm1(delta);  // d(-beta kl)/d logp

    out.value += std::min(unclipped, clipped) - config.kl_beta * kl;
    out.mean_kl += kl;

    for (int c = 0; c < kResponseClassCount; ++c) {
      double glp = (c == cls ? 1.0 : 0.0) - probs[c];
      out.grad.bias[c] += coeff * glp;
      double* row = out.grad.weights.data() + static_cast<std::size_t>(c) * d;
      for (int k = 0; k < d; ++k) row[k] += coeff * glp * features[k];
    }
  }

  const double inv = 1.0 / static_cast<double>(g);
  out.value *= inv;
  out.mean_kl *= inv;
  out.grad.scale(inv);
  return out;
}

GroupRollout rollout_group(const PolicyParams& behaviour, const Task& task,
                           const TrainConfig& config, Rng& rng) {
  if (task.answer_withheld) {
    throw std::invalid_argument("rollout: task answer is withheld");
  }
  auto logit_values = logits(behaviour, task.features);
  auto dist = action_distribution(logit_values, config.sampling);
  auto log_probs = log_softmax(logit_values);

  GroupRollout group;
  group.task_id = task.id;
  std::vector<double> totals;
  for (int i = 0; i < config.group_size; ++i) {
    int cls = sample_class(dist, rng);
    ParsedResponse parsed = parse_response(render_response(cls, ""));
    RewardBreakdown reward =
        total_reward(parsed, task.answer, accuracy_mode(config.algorithm));
    group.classes.push_back(cls);
    group.responses.push_back(std::move(parsed));
    group.old_log_probs.push_back(log_probs[cls]);
    group.rewards.push_back(reward);
    totals.push_back(reward.total);
  }
  group.advantages = compute_advantages(totals);
  return group;
}

std::string MetricsLog::csv() const {
  std::string out =
      "epoch,batch,mean_reward,mean_format_reward,mean_accuracy_reward,"
      "mean_kl,clip_fraction,eval_overall";
  for (int d = 0; d < kDimensionCount; ++d) {
    out += ",eval_";
    out += std::string(to_string(static_cast<Dimension>(d)));
  }
  out += '\n';
  for (const MetricsRow& r : rows) {
    out += std::to_string(r.epoch);
    out += ',';
    out += std::to_string(r.batch);
    out += ',';
    out += format_double(r.mean_reward);
    out += ',';
    out += format_double(r.mean_format_reward);
    out += ',';
    out += format_double(r.mean_accuracy_reward);
    out += ',';
    out += format_double(r.mean_kl);
    out += ',';
    out += format_double(r.clip_fraction);
    out += ',';
    out += format_double(r.eval_overall);
    for (int d = 0; d < kDimensionCount; ++d) {
      out += ',';
      out += format_double(r.eval_dimensions[d]);
    }
    out += '\n';
  }
  return out;
}

TrainResult train(const DatasetSplits& splits, PolicyParams initial,
                  const TrainConfig& config,
                  std::span<const std::vector<Task>> epoch_plan) {
  config.validate();
  if (epoch_plan.empty()) throw std::invalid_argument("train: empty epoch plan");
  if (static_cast<int>(epoch_plan.size()) != config.epochs) {
    throw std::invalid_argument("train: plan length does not match epochs");
  }
  if (splits.testing.empty()) {
    throw std::invalid_argument("train: empty testing split");
  }
  for (const auto& epoch : epoch_plan) {
    if (epoch.empty()) throw std::invalid_argument("train: empty epoch in plan");
    for (const Task& t : epoch) {
      if (t.answer_withheld) {
        throw std::invalid_argument("train: plan contains withheld answers");
      }
    }
  }

  const PolicyParams reference = initial;  // frozen for the whole run
  PolicyParams params = std::move(initial);
  TrainResult result;

  for (std::size_t e = 0; e < epoch_plan.size(); ++e) {
    const auto& tasks = epoch_plan[e];
    const std::size_t batches =
        (tasks.size() + config.batch_size - 1) / config.batch_size;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t begin = b * config.batch_size;
      const std::size_t end = std::min(tasks.size(), begin + config.batch_size);

      const PolicyParams behaviour = params;
      std::vector<GroupRollout> groups;
      groups.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i) {
        Rng rng(derive_seed(config.seed,
                            {fnv1a64("rollout"), static_cast<std::uint64_t>(e),
                             static_cast<std::uint64_t>(i),
                             static_cast<std::uint64_t>(tasks[i].id)}));
        groups.push_back(rollout_group(behaviour, tasks[i], config, rng));
      }

      ParamGrad grad = ParamGrad::zeros(params.feature_dim);
      MetricsRow row;
      row.epoch = static_cast<int>(e);
      row.batch = static_cast<int>(b);
      int samples = 0;
      int clipped = 0;
      for (std::size_t i = begin; i < end; ++i) {
        const GroupRollout& group = groups[i - begin];
        auto obj = objective_and_grad(params, tasks[i].features, group,
                                      reference, config);
        grad.add_scaled(obj.grad, 1.0);
        row.mean_kl += obj.mean_kl;
        clipped += obj.clipped_samples;
        for (const RewardBreakdown& r : group.rewards) {
          row.mean_reward += r.total;
          row.mean_format_reward += r.format;
          row.mean_accuracy_reward += r.accuracy;
          ++samples;
        }
      }
      const double n_groups = static_cast<double>(end - begin);
      grad.scale(1.0 / n_groups);
      apply_step(params, grad, config.learning_rate);

      row.mean_reward /= samples;
      row.mean_format_reward /= samples;
      row.mean_accuracy_reward /= samples;
      row.mean_kl /= n_groups;
      row.clip_fraction = static_cast<double>(clipped) / samples;

      ScoreReport report = evaluate(params, splits.testing);
      row.eval_overall = report.overall;
      row.eval_dimensions = report.dimension_scores;
      result.metrics.rows.push_back(row);
    }
  }

  result.params = std::move(params);
  return result;
}

}  // namespace grpolab
