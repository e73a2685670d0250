#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "grpolab/response.hpp"
#include "grpolab/rng.hpp"

namespace grpolab {

// Linear-softmax categorical policy over the 17 response classes:
// logits = W x + b with W laid out row-major, one row per class.
struct PolicyParams {
  int feature_dim = 0;
  std::vector<double> weights;  // kResponseClassCount * feature_dim
  std::vector<double> bias;     // kResponseClassCount
  std::uint64_t seed = 0;
  std::string stage = "init";

  static PolicyParams zeros(int feature_dim);
};

struct ParamGrad {
  int feature_dim = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  static ParamGrad zeros(int feature_dim);
  void add_scaled(const ParamGrad& other, double scale);
  void scale(double factor);
};

// params += step * grad.
void apply_step(PolicyParams& params, const ParamGrad& grad, double step);

struct SamplingConfig {
  double temperature = 1.0;
  int top_k = 3;
  double top_p = 0.8;

  void validate() const;
};

struct SftExample {
  std::vector<double> features;
  int target_class = 0;
};

std::vector<double> logits(const PolicyParams& params,
                           std::span<const double> features);
std::vector<double> softmax(std::span<const double> logit_values);
std::vector<double> log_softmax(std::span<const double> logit_values);

// Log-probability under the full temperature-1 softmax. Deliberately
// independent of any sampling truncation: the surrogate objective and the
// importance ratios are defined against the untruncated distribution.
double log_prob(const PolicyParams& params, std::span<const double> features,
                int response_class);

// Analytic gradient of log_prob: row j of dW is ([j == c] - p_j) x.
ParamGrad log_prob_grad(const PolicyParams& params,
                        std::span<const double> features, int response_class);

// Sampling distribution: temperature scaling, then top-k, then top-p over
// the survivors, then renormalization. Ties at either cutoff keep the
// lower class index. Probabilities outside the kept set are exactly 0.
std::vector<double> action_distribution(std::span<const double> logit_values,
                                        const SamplingConfig& config);

// Inverse-CDF draw from an explicit distribution (must sum to 1).
int sample_class(std::span<const double> distribution, Rng& rng);

// Argmax decode; ties keep the lowest class index.
int greedy_class(const PolicyParams& params, std::span<const double> features);

// Mean cross-entropy over the batch; if grad is non-null it receives the
// loss gradient (not the ascent direction).
double sft_loss_and_grad(const PolicyParams& params,
                         std::span<const SftExample> batch, ParamGrad* grad);

struct SftStepResult {
  PolicyParams params;
  double loss = 0.0;  // evaluated before the update
};

// One full-batch gradient-descent step on the cross-entropy loss.
SftStepResult sft_step(const PolicyParams& params,
                       std::span<const SftExample> batch,
                       double learning_rate);

struct SftTrainResult {
  PolicyParams params;
  std::vector<double> epoch_losses;  // mean pre-update batch loss per epoch
};

// Mini-batch SFT: shuffles example order each epoch (deterministically in
// the seed) and takes one sft_step per consecutive batch.
SftTrainResult sft_train(PolicyParams params, std::span<const SftExample> data,
                         int epochs, int batch_size, double learning_rate,
                         std::uint64_t seed);

// Checkpoint files are JSON: stage, seed, d, weights (flat row-major), bias.
std::string checkpoint_json(const PolicyParams& params);
void save_checkpoint(const std::string& path, const PolicyParams& params);
PolicyParams load_checkpoint(const std::string& path);

}  // namespace grpolab
