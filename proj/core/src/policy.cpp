#include "grpolab/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace grpolab {

namespace {

void check_dim(const PolicyParams& params, std::span<const double> features) {
  if (params.feature_dim <= 0) {
    throw std::invalid_argument("policy: feature_dim must be positive");
  }
  if (params.weights.size() !=
          static_cast<std::size_t>(kResponseClassCount) * params.feature_dim ||
      params.bias.size() != static_cast<std::size_t>(kResponseClassCount)) {
    throw std::invalid_argument("policy: parameter shape mismatch");
  }
  if (features.size() != static_cast<std::size_t>(params.feature_dim)) {
    throw std::invalid_argument("policy: feature dimension mismatch");
  }
}

void check_class(int response_class) {
  if (response_class < 0 || response_class >= kResponseClassCount) {
    throw std::invalid_argument("policy: response class out of range");
  }
}

}  // namespace

PolicyParams PolicyParams::zeros(int feature_dim) {
  if (feature_dim <= 0) {
    throw std::invalid_argument("PolicyParams::zeros: feature_dim must be positive");
  }
  PolicyParams p;
  p.feature_dim = feature_dim;
  p.weights.assign(static_cast<std::size_t>(kResponseClassCount) * feature_dim, 0.0);
  p.bias.assign(kResponseClassCount, 0.0);
  return p;
}

ParamGrad ParamGrad::zeros(int feature_dim) {
  ParamGrad g;
  g.feature_dim = feature_dim;
  g.weights.assign(static_cast<std::size_t>(kResponseClassCount) * feature_dim, 0.0);
  g.bias.assign(kResponseClassCount, 0.0);
  return g;
}

void ParamGrad::add_scaled(const ParamGrad& other, double factor) {
  if (other.feature_dim != feature_dim) {
    throw std::invalid_argument("ParamGrad::add_scaled: dimension mismatch");
  }
  for (std::size_t i = 0; i < weights.size(); ++i) weights[i] += factor * other.weights[i];
  for (std::size_t i = 0; i < bias.size(); ++i) bias[i] += factor * other.bias[i];
}

void ParamGrad::scale(double factor) {
  for (double& w : weights) w *= factor;
  for (double& b : bias) b *= factor;
}

void apply_step(PolicyParams& params, const ParamGrad& grad, double step) {
  if (grad.feature_dim != params.feature_dim) {
    throw std::invalid_argument("apply_step: dimension mismatch");
  }
  for (std::size_t i = 0; i < params.weights.size(); ++i) {
    params.weights[i] += step * grad.weights[i];
  }
  for (std::size_t i = 0; i < params.bias.size(); ++i) {
    params.bias[i] += step * grad.bias[i];
  }
}

void SamplingConfig::validate() const {
  if (!(temperature > 0.0)) {
    throw std::invalid_argument("sampling: temperature must be positive");
  }
  if (top_k < 1) throw std::invalid_argument("sampling: top_k must be >= 1");
  if (!(top_p > 0.0) || top_p > 1.0) {
    throw std::invalid_argument("sampling: top_p must be in (0, 1]");
  }
}

std::vector<double> logits(const PolicyParams& params,
                           std::span<const double> features) {
  check_dim(params, features);
  std::vector<double> out(kResponseClassCount);
  const int d = params.feature_dim;
  for (int c = 0; c < kResponseClassCount; ++c) {
    double acc = params.bias[c];
    const double* row = params.weights.data() + static_cast<std::size_t>(c) * d;
    for (int k = 0; k < d; ++k) acc += row[k] * features[k];
    out[c] = acc;
  }
  return out;
}

std::vector<double> log_softmax(std::span<const double> logit_values) {
  if (logit_values.empty()) {
    throw std::invalid_argument("log_softmax: empty input");
  }
  double mx = *std::max_element(logit_values.begin(), logit_values.end());
  double sum = 0.0;
  for (double v : logit_values) sum += std::exp(v - mx);
  double lse = mx + std::log(sum);
  std::vector<double> out(logit_values.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = logit_values[i] - lse;
  return out;
}

std::vector<double> softmax(std::span<const double> logit_values) {
  auto ls = log_softmax(logit_values);
  for (double& v : ls) v = std::exp(v);
  return ls;
}

double log_prob(const PolicyParams& params, std::span<const double> features,
                int response_class) {
  check_class(response_class);
  auto ls = log_softmax(logits(params, features));
  return ls[response_class];
}

ParamGrad log_prob_grad(const PolicyParams& params,
                        std::span<const double> features, int response_class) {
  check_class(response_class);
  auto probs = softmax(logits(params, features));
  ParamGrad g = ParamGrad::zeros(params.feature_dim);
  const int d = params.feature_dim;
  for (int c = 0; c < kResponseClassCount; ++c) {
    double coeff = (c == response_class ? 1.0 : 0.0) - probs[c];
    g.bias[c] = coeff;
    double* row = g.weights.data() + static_cast<std::size_t>(c) * d;
    for (int k = 0; k < d; ++k) row[k] = coeff * features[k];
  }
  return g;
}

std::vector<double> action_distribution(std::span<const double> logit_values,
                                        const SamplingConfig& config) {
  config.validate();
  const int n = static_cast<int>(logit_values.size());
  if (n == 0) throw std::invalid_argument("action_distribution: empty input");

  std::vector<double> scaled(n);
  for (int i = 0; i < n; ++i) scaled[i] = logit_values[i] / config.temperature;

  // Descending logit order; stable sort keeps equal logits in ascending
  // index order, which is the tie rule at both cutoffs.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scaled[a] > scaled[b]; });

  const int k = std::min(config.top_k, n);
  double mx = scaled[order[0]];
  std::vector<double> probs(n, 0.0);
  double denom = 0.0;
  for (int i = 0; i < k; ++i) {
    double e = std::exp(scaled[order[i]] - mx);
    probs[order[i]] = e;
    denom += e;
  }
  for (int i = 0; i < k; ++i) probs[order[i]] /= denom;

  // Softmax is monotone in the logits, so order[] already walks the top-k
  // probabilities in descending order: the nucleus is a prefix.
  int keep = k;
  double cum = 0.0;
  for (int i = 0; i < k; ++i) {
    cum += probs[order[i]];
    if (cum >= config.top_p) {
      keep = i + 1;
      break;
    }
  }
  if (keep < k) {
    double mass = 0.0;
    for (int i = 0; i < keep; ++i) mass += probs[order[i]];
    for (int i = keep; i < k; ++i) probs[order[i]] = 0.0;
    for (int i = 0; i < keep; ++i) probs[order[i]] /= mass;
  }
  return probs;
}

int sample_class(std::span<const double> distribution, Rng& rng) {
  if (distribution.empty()) {
    throw std::invalid_argument("sample_class: empty distribution");
  }
  double sum = 0.0;
  for (double p : distribution) {
    if (p < 0.0) throw std::invalid_argument("sample_class: negative probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("sample_class: distribution does not sum to 1");
  }
  double u = rng.uniform();
  double cum = 0.0;
  int last_positive = 0;
  for (std::size_t i = 0; i < distribution.size(); ++i) {
    if (distribution[i] <= 0.0) continue;
    last_positive = static_cast<int>(i);
    cum += distribution[i];
    if (u < cum) return static_cast<int>(i);
  }
  return last_positive;  // u landed in the rounding gap below 1
}

int greedy_class(const PolicyParams& params, std::span<const double> features) {
  auto lg = logits(params, features);
  int best = 0;
  for (int i = 1; i < static_cast<int>(lg.size()); ++i) {
    if (lg[i] > lg[best]) best = i;
  }
  return best;
}

double sft_loss_and_grad(const PolicyParams& params,
                         std::span<const SftExample> batch, ParamGrad* grad) {
  if (batch.empty()) throw std::invalid_argument("sft: empty batch");
  if (grad) *grad = ParamGrad::zeros(params.feature_dim);
  double loss = 0.0;
  const int d = params.feature_dim;
  for (const SftExample& ex : batch) {
    check_class(ex.target_class);
    auto ls = log_softmax(logits(params, ex.features));
    loss -= ls[ex.target_class];
    if (!grad) continue;
    for (int c = 0; c < kResponseClassCount; ++c) {
      // d(-log p_t)/d logit_c = p_c - [c == t]
      double coeff = std::exp(ls[c]) - (c == ex.target_class ? 1.0 : 0.0);
      grad->bias[c] += coeff;
      double* row = grad->weights.data() + static_cast<std::size_t>(c) * d;
      for (int k = 0; k < d; ++k) row[k] += coeff * ex.features[k];
    }
  }
  double inv = 1.0 / static_cast<double>(batch.size());
  if (grad) grad->scale(inv);
  return loss * inv;
}

SftStepResult sft_step(const PolicyParams& params,
                       std::span<const SftExample> batch,
                       double learning_rate) {
  if (!(learning_rate > 0.0)) {
    throw std::invalid_argument("sft_step: learning rate must be positive");
  }
  ParamGrad grad;
  double loss = sft_loss_and_grad(params, batch, &grad);
  SftStepResult out{params, loss};
  apply_step(out.params, grad, -learning_rate);
  return out;
}

SftTrainResult sft_train(PolicyParams params, std::span<const SftExample> data,
                         int epochs, int batch_size, double learning_rate,
                         std::uint64_t seed) {
  if (epochs < 0) throw std::invalid_argument("sft_train: negative epochs");
  if (batch_size < 1) throw std::invalid_argument("sft_train: batch_size must be >= 1");
  if (data.empty()) throw std::invalid_argument("sft_train: empty dataset");

  SftTrainResult out;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (int e = 0; e < epochs; ++e) {
    Rng rng(derive_seed(seed, {fnv1a64("sft_shuffle"), static_cast<std::uint64_t>(e)}));
    rng.shuffle(order);
    double epoch_loss = 0.0;
    int batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
      std::size_t end = std::min(order.size(), begin + batch_size);
      std::vector<SftExample> batch;
      batch.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i) batch.push_back(data[order[i]]);
      auto step = sft_step(params, batch, learning_rate);
      params = std::move(step.params);
      epoch_loss += step.loss;
      ++batches;
    }
    out.epoch_losses.push_back(epoch_loss / batches);
  }
  out.params = std::move(params);
  return out;
}

std::string checkpoint_json(const PolicyParams& params) {
  nlohmann::ordered_json j;
  j["stage"] = params.stage;
  j["seed"] = params.seed;
  j["d"] = params.feature_dim;
  j["weights"] = params.weights;
  j["bias"] = params.bias;
  return j.dump(2) + "\n";
}

void save_checkpoint(const std::string& path, const PolicyParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out << checkpoint_json(params);
  if (!out) throw std::runtime_error("save_checkpoint: write failed: " + path);
}

PolicyParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("load_checkpoint: bad JSON in " + path + ": " + e.what());
  }
  PolicyParams p;
  try {
    p.stage = j.at("stage").get<std::string>();
    p.seed = j.at("seed").get<std::uint64_t>();
    p.feature_dim = j.at("d").get<int>();
    p.weights = j.at("weights").get<std::vector<double>>();
    p.bias = j.at("bias").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("load_checkpoint: missing field in " + path + ": " + e.what());
  }
  if (p.feature_dim <= 0 ||
      p.weights.size() !=
          static_cast<std::size_t>(kResponseClassCount) * p.feature_dim ||
      p.bias.size() != static_cast<std::size_t>(kResponseClassCount)) {
    throw std::runtime_error("load_checkpoint: inconsistent shapes in " + path);
  }
  return p;
}

}  // namespace grpolab
