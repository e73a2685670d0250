#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <vector>

#include "grpolab/dataset.hpp"
#include "grpolab/policy.hpp"
#include "grpolab/rng.hpp"

using namespace grpolab;

namespace {

constexpr int kDim = 6;

PolicyParams random_params(std::uint64_t seed, int dim = kDim,
                           double scale = 0.7) {
  Rng rng(seed);
  PolicyParams p = PolicyParams::zeros(dim);
  for (double& w : p.weights) w = scale * rng.normal();
  for (double& b : p.bias) b = scale * rng.normal();
  return p;
}

std::vector<double> random_features(std::uint64_t seed, int dim = kDim) {
  Rng rng(seed);
  std::vector<double> x(dim);
  for (double& v : x) v = rng.normal();
  return x;
}

// Central finite difference of a scalar function of the parameters.
template <typename F>
ParamGrad fd_grad(PolicyParams params, F&& f, double h = 1e-5) {
  ParamGrad g = ParamGrad::zeros(params.feature_dim);
  for (std::size_t i = 0; i < params.weights.size(); ++i) {
    double keep = params.weights[i];
    params.weights[i] = keep + h;
    double up = f(params);
    params.weights[i] = keep - h;
    double down = f(params);
    params.weights[i] = keep;
    g.weights[i] = (up - down) / (2.0 * h);
  }
  for (std::size_t i = 0; i < params.bias.size(); ++i) {
    double keep = params.bias[i];
    params.bias[i] = keep + h;
    double up = f(params);
    params.bias[i] = keep - h;
    double down = f(params);
    params.bias[i] = keep;
    g.bias[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// Relative error for large components, absolute for small ones; the floor
// keeps finite-difference roundoff on near-zero entries from dominating.
double max_rel_err(const ParamGrad& analytic, const ParamGrad& fd) {
  double worst = 0.0;
  auto upd = [&](double a, double b) {
    double denom = std::max({std::abs(a), std::abs(b), 1.0});
    worst = std::max(worst, std::abs(a - b) / denom);
  };
  for (std::size_t i = 0; i < analytic.weights.size(); ++i) {
    upd(analytic.weights[i], fd.weights[i]);
  }
  for (std::size_t i = 0; i < analytic.bias.size(); ++i) {
    upd(analytic.bias[i], fd.bias[i]);
  }
  return worst;
}

}  // namespace

TEST_CASE("zero parameters give the uniform distribution") {
  PolicyParams p = PolicyParams::zeros(kDim);
  auto x = random_features(1);
  auto l = logits(p, x);
  for (double v : l) CHECK(v == 0.0);
  for (int cls = 0; cls < kResponseClassCount; ++cls) {
    CHECK(log_prob(p, x, cls) ==
          doctest::Approx(-std::log(17.0)).epsilon(1e-12));
  }
}

TEST_CASE("a dominant row wins the argmax") {
  PolicyParams p = PolicyParams::zeros(kDim);
  int cls = 5;
  for (int k = 0; k < kDim; ++k) {
    p.weights[static_cast<std::size_t>(cls) * kDim + k] = 10.0;
  }
  std::vector<double> x(kDim, 1.0);
  CHECK(greedy_class(p, x) == cls);
}

TEST_CASE("log probabilities normalize and shift-invariance holds") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    PolicyParams p = random_params(seed);
    auto x = random_features(seed + 100);
    double sum = 0.0;
    for (int cls = 0; cls < kResponseClassCount; ++cls) {
      sum += std::exp(log_prob(p, x, cls));
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

    PolicyParams shifted = p;
    for (double& b : shifted.bias) b += 3.25;
    for (int cls = 0; cls < kResponseClassCount; ++cls) {
      CHECK(log_prob(shifted, x, cls) ==
            doctest::Approx(log_prob(p, x, cls)).epsilon(1e-12));
    }
  }
}

TEST_CASE("log_prob matches a naive direct recomputation") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    PolicyParams p = random_params(seed);
    auto x = random_features(seed + 50);
    auto l = logits(p, x);
    double z = 0.0;
    for (double v : l) z += std::exp(v);
    for (int cls = 0; cls < kResponseClassCount; ++cls) {
      double naive = std::log(std::exp(l[static_cast<std::size_t>(cls)]) / z);
      CHECK(log_prob(p, x, cls) == doctest::Approx(naive).epsilon(1e-12));
    }
  }
}

TEST_CASE("log_prob_grad matches central finite differences") {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    PolicyParams p = random_params(seed);
    auto x = random_features(seed + 1000);
    int cls = static_cast<int>(seed % kResponseClassCount);
    ParamGrad analytic = log_prob_grad(p, x, cls);
    ParamGrad fd = fd_grad(p, [&](const PolicyParams& q) {
      return log_prob(q, x, cls);
    });
    worst = std::max(worst, max_rel_err(analytic, fd));
  }
  CHECK(worst < 1e-7);
}

TEST_CASE("score-function identity: expected gradient is zero") {
  PolicyParams p = random_params(7);
  auto x = random_features(8);
  ParamGrad sum = ParamGrad::zeros(kDim);
  for (int cls = 0; cls < kResponseClassCount; ++cls) {
    double prob = std::exp(log_prob(p, x, cls));
    sum.add_scaled(log_prob_grad(p, x, cls), prob);
  }
  for (double v : sum.weights) CHECK(std::abs(v) < 1e-10);
  for (double v : sum.bias) CHECK(std::abs(v) < 1e-10);
}

TEST_CASE("uniform policy gradient has the closed-form bias entry") {
  PolicyParams p = PolicyParams::zeros(kDim);
  auto x = random_features(3);
  int cls = 4;
  ParamGrad g = log_prob_grad(p, x, cls);
  CHECK(g.bias[static_cast<std::size_t>(cls)] ==
        doctest::Approx(1.0 - 1.0 / 17.0).epsilon(1e-12));
  CHECK(g.bias[0] == doctest::Approx(-1.0 / 17.0).epsilon(1e-12));
}

TEST_CASE("action distribution: worked truncation example") {
  std::vector<double> l(kResponseClassCount, -1e9);
  l[0] = 2.0;
  l[1] = 1.0;
  l[2] = 0.0;
  l[3] = -1.0;
  SamplingConfig cfg{1.0, 3, 1.0};
  auto dist = action_distribution(l, cfg);
  CHECK(dist[0] == doctest::Approx(0.6652).epsilon(1e-3));
  CHECK(dist[1] == doctest::Approx(0.2447).epsilon(1e-3));
  CHECK(dist[2] == doctest::Approx(0.0900).epsilon(1e-3));
  for (int cls = 3; cls < kResponseClassCount; ++cls) {
    CHECK(dist[static_cast<std::size_t>(cls)] == 0.0);
  }
}

TEST_CASE("action distribution: no truncation reproduces the softmax") {
  PolicyParams p = random_params(11);
  auto x = random_features(12);
  auto l = logits(p, x);
  SamplingConfig cfg{1.0, kResponseClassCount, 1.0};
  auto dist = action_distribution(l, cfg);
  auto full = softmax(l);
  for (int cls = 0; cls < kResponseClassCount; ++cls) {
    CHECK(dist[static_cast<std::size_t>(cls)] ==
          doctest::Approx(full[static_cast<std::size_t>(cls)]).epsilon(1e-12));
  }
}

TEST_CASE("action distribution: top-1 is a point mass on the argmax") {
  PolicyParams p = random_params(13);
  auto x = random_features(14);
  auto l = logits(p, x);
  SamplingConfig cfg{1.0, 1, 1.0};
  auto dist = action_distribution(l, cfg);
  int arg = greedy_class(p, x);
  for (int cls = 0; cls < kResponseClassCount; ++cls) {
    CHECK(dist[static_cast<std::size_t>(cls)] == (cls == arg ? 1.0 : 0.0));
  }
}

TEST_CASE("top-p keeps the smallest prefix reaching the mass") {
  // probs 0.5 / 0.25 / 0.25, top_p = 0.7: the prefix crosses 0.7 at the
  // second entry, and the 0.25 tie resolves to the lower class index.
  std::vector<double> l(kResponseClassCount, -1e9);
  l[4] = std::log(0.5);
  l[9] = std::log(0.25);
  l[2] = std::log(0.25);
  SamplingConfig cfg{1.0, 17, 0.7};
  auto dist = action_distribution(l, cfg);
  CHECK(dist[4] == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
  CHECK(dist[2] == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
  CHECK(dist[9] == 0.0);

  double kept = 0.0;
  int support = 0;
  for (double v : dist) {
    kept += v;
    support += v > 0.0 ? 1 : 0;
  }
  CHECK(kept == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(support == 2);
}

TEST_CASE("ties at the truncation cutoffs keep the lower class index") {
  std::vector<double> l(kResponseClassCount, 0.0);  // all equal
  SamplingConfig cfg{1.0, 3, 1.0};
  auto dist = action_distribution(l, cfg);
  for (int cls = 0; cls < kResponseClassCount; ++cls) {
    double expect = cls < 3 ? 1.0 / 3.0 : 0.0;
    CHECK(dist[static_cast<std::size_t>(cls)] ==
          doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("support size never exceeds top_k and kept mass covers top_p") {
  for (int trial = 0; trial < 50; ++trial) {
    PolicyParams p = random_params(200 + static_cast<std::uint64_t>(trial),
                                   kDim, 1.5);
    auto x = random_features(300 + static_cast<std::uint64_t>(trial));
    auto l = logits(p, x);
    SamplingConfig cfg{0.7, 3, 0.8};
    auto dist = action_distribution(l, cfg);
    auto tempered = l;
    for (double& v : tempered) v /= cfg.temperature;
    auto full = softmax(tempered);

    // The nucleus cutoff acts on the distribution already restricted to the
    // top_k classes, so measure kept mass relative to that restriction.
    std::vector<int> order(kResponseClassCount);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return full[static_cast<std::size_t>(a)] >
             full[static_cast<std::size_t>(b)];
    });
    double topk_mass = 0.0;
    for (int i = 0; i < cfg.top_k; ++i) {
      topk_mass += full[static_cast<std::size_t>(order[i])];
    }

    int support = 0;
    double kept_mass = 0.0;
    double min_kept = 1.0;
    double total = 0.0;
    for (int cls = 0; cls < kResponseClassCount; ++cls) {
      double v = dist[static_cast<std::size_t>(cls)];
      total += v;
      if (v > 0.0) {
        ++support;
        double pre = full[static_cast<std::size_t>(cls)] / topk_mass;
        kept_mass += pre;
        min_kept = std::min(min_kept, pre);
      }
    }
    CHECK(support <= cfg.top_k);
    CHECK(support >= 1);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    // The kept prefix reaches the mass, and no shorter prefix would.
    CHECK(kept_mass >= cfg.top_p - 1e-9);
    CHECK(kept_mass - min_kept < cfg.top_p + 1e-9);
  }
}

TEST_CASE("sampling draws only from the support, deterministically") {
  PolicyParams p = random_params(17);
  auto x = random_features(18);
  SamplingConfig cfg{1.0, 3, 0.8};
  auto dist = action_distribution(logits(p, x), cfg);

  Rng a(42), b(42);
  for (int i = 0; i < 2000; ++i) {
    int c1 = sample_class(dist, a);
    int c2 = sample_class(dist, b);
    CHECK(c1 == c2);
    CHECK(dist[static_cast<std::size_t>(c1)] > 0.0);
  }
}

TEST_CASE("point mass always samples its class") {
  std::vector<double> dist(kResponseClassCount, 0.0);
  dist[5] = 1.0;
  Rng rng(1);
  for (int i = 0; i < 100; ++i) CHECK(sample_class(dist, rng) == 5);
}

TEST_CASE("uniform sampling concentrates near uniform frequencies") {
  std::vector<double> dist(kResponseClassCount, 0.0);
  for (int cls = 0; cls < 16; ++cls) {
    dist[static_cast<std::size_t>(cls)] = 1.0 / 16.0;
  }
  Rng rng(7);
  std::vector<int> counts(17, 0);
  const int n = 16000;
  for (int i = 0; i < n; ++i) counts[static_cast<std::size_t>(sample_class(dist, rng))]++;
  CHECK(counts[16] == 0);
  for (int cls = 0; cls < 16; ++cls) {
    double freq = static_cast<double>(counts[static_cast<std::size_t>(cls)]) / n;
    CHECK(freq >= 0.0525);
    CHECK(freq <= 0.0725);
  }
}

TEST_CASE("sample_class validates the distribution") {
  std::vector<double> bad(kResponseClassCount, 0.0);
  bad[0] = 0.7;  // sums to 0.7
  Rng rng(1);
  CHECK_THROWS_AS(sample_class(bad, rng), std::invalid_argument);
}

TEST_CASE("sampling config validation") {
  CHECK_THROWS_AS((SamplingConfig{0.0, 3, 0.8}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((SamplingConfig{1.0, 0, 0.8}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((SamplingConfig{1.0, 3, 0.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((SamplingConfig{1.0, 3, 1.1}.validate()), std::invalid_argument);
  CHECK_NOTHROW((SamplingConfig{1.0, 3, 0.8}.validate()));
  CHECK_NOTHROW((SamplingConfig{1.0, 3, 1.0}.validate()));
}

TEST_CASE("sft loss at zero parameters is log 17") {
  PolicyParams p = PolicyParams::zeros(kDim);
  std::vector<SftExample> batch;
  for (std::uint64_t i = 0; i < 8; ++i) {
    batch.push_back({random_features(500 + i), static_cast<int>(i % 16)});
  }
  double loss = sft_loss_and_grad(p, batch, nullptr);
  CHECK(loss == doctest::Approx(std::log(17.0)).epsilon(1e-9));
}

TEST_CASE("sft gradient matches finite differences") {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    PolicyParams p = random_params(seed);
    std::vector<SftExample> batch;
    Rng rng(seed + 77);
    for (int i = 0; i < 6; ++i) {
      batch.push_back({random_features(seed * 31 + static_cast<std::uint64_t>(i)),
                       static_cast<int>(rng.below(16))});
    }
    ParamGrad analytic = ParamGrad::zeros(kDim);
    sft_loss_and_grad(p, batch, &analytic);
    ParamGrad fd = fd_grad(p, [&](const PolicyParams& q) {
      return sft_loss_and_grad(q, batch, nullptr);
    });
    worst = std::max(worst, max_rel_err(analytic, fd));
  }
  CHECK(worst < 1e-7);
}

TEST_CASE("sft_step descends and reports the pre-update loss") {
  PolicyParams p = random_params(3);
  std::vector<SftExample> batch;
  for (std::uint64_t i = 0; i < 12; ++i) {
    batch.push_back({random_features(900 + i), static_cast<int>(i % 16)});
  }
  double before = sft_loss_and_grad(p, batch, nullptr);
  SftStepResult step = sft_step(p, batch, 0.05);
  CHECK(step.loss == doctest::Approx(before).epsilon(1e-12));
  double after = sft_loss_and_grad(step.params, batch, nullptr);
  CHECK(after < before);
}

TEST_CASE("a converged batch stays put") {
  PolicyParams p = PolicyParams::zeros(kDim);
  std::vector<SftExample> batch{{std::vector<double>(kDim, 0.0), 3}};
  p.bias[3] = 40.0;  // probability ~1 on the target
  SftStepResult step = sft_step(p, batch, 0.05);
  CHECK(step.loss < 1e-12);
  for (std::size_t i = 0; i < p.bias.size(); ++i) {
    CHECK(std::abs(step.params.bias[i] - p.bias[i]) < 1e-6);
  }
}

TEST_CASE("full-batch sft is non-increasing over 100 steps on default data") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    GenConfig gen;
    gen.exploration_size = 0;  // unused by SFT
    DatasetSplits splits = generate_dataset(gen, seed);
    std::vector<SftExample> batch;
    for (const Task& t : splits.training) {
      batch.push_back({t.features, t.target->cls()});
    }
    PolicyParams p = PolicyParams::zeros(gen.feature_dim);
    double prev = sft_loss_and_grad(p, batch, nullptr);
    for (int step = 0; step < 100; ++step) {
      SftStepResult r = sft_step(p, batch, 0.05);
      CHECK(r.loss <= prev + 1e-12);
      prev = r.loss;
      p = std::move(r.params);
    }
    double final_loss = sft_loss_and_grad(p, batch, nullptr);
    CHECK(final_loss <= prev + 1e-12);
    CHECK(final_loss < std::log(17.0));
  }
}

TEST_CASE("sft_train is deterministic and logs one loss per epoch") {
  std::vector<SftExample> data;
  Rng rng(5);
  for (int i = 0; i < 40; ++i) {
    std::vector<double> x(kDim);
    for (double& v : x) v = rng.normal();
    data.push_back({x, static_cast<int>(rng.below(16))});
  }
  auto r1 = sft_train(PolicyParams::zeros(kDim), data, 3, 8, 0.05, 42);
  auto r2 = sft_train(PolicyParams::zeros(kDim), data, 3, 8, 0.05, 42);
  CHECK(r1.epoch_losses.size() == 3);
  CHECK(r1.epoch_losses == r2.epoch_losses);
  CHECK(r1.params.weights == r2.params.weights);
  CHECK(r1.params.bias == r2.params.bias);

  auto r3 = sft_train(PolicyParams::zeros(kDim), data, 3, 8, 0.05, 43);
  CHECK(r3.params.weights != r1.params.weights);
}

TEST_CASE("checkpoints round-trip through files") {
  namespace fs = std::filesystem;
  PolicyParams p = random_params(21);
  p.stage = "sft2";
  p.seed = 99;
  fs::path path = fs::temp_directory_path() / "grpolab_test_ckpt.json";
  save_checkpoint(path.string(), p);
  PolicyParams q = load_checkpoint(path.string());
  CHECK(q.feature_dim == p.feature_dim);
  CHECK(q.weights == p.weights);
  CHECK(q.bias == p.bias);
  CHECK(q.stage == "sft2");
  CHECK(q.seed == 99);
  fs::remove(path);
}

TEST_CASE("checkpoint loading rejects corrupt files") {
  namespace fs = std::filesystem;
  fs::path path = fs::temp_directory_path() / "grpolab_test_bad_ckpt.json";
  {
    std::ofstream out(path);
    out << "{ not json";
  }
  CHECK_THROWS_AS(load_checkpoint(path.string()), std::runtime_error);
  {
    std::ofstream out(path);
    out << R"({"stage":"x","seed":0,"d":3,"weights":[1,2],"bias":[]})";
  }
  CHECK_THROWS_AS(load_checkpoint(path.string()), std::runtime_error);
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/nowhere.json"),
                  std::runtime_error);
  fs::remove(path);
}

TEST_CASE("dimension mismatches are rejected") {
  PolicyParams p = PolicyParams::zeros(kDim);
  std::vector<double> short_x(kDim - 1, 0.0);
  CHECK_THROWS_AS(logits(p, short_x), std::invalid_argument);
  CHECK_THROWS_AS(log_prob(p, short_x, 0), std::invalid_argument);
}

TEST_CASE("apply_step is params += step * grad") {
  PolicyParams p = PolicyParams::zeros(2);
  ParamGrad g = ParamGrad::zeros(2);
  g.weights[0] = 1.0;
  g.bias[16] = -2.0;
  apply_step(p, g, 0.5);
  CHECK(p.weights[0] == 0.5);
  CHECK(p.bias[16] == -1.0);
  apply_step(p, g, -0.5);
  CHECK(p.weights[0] == 0.0);
  CHECK(p.bias[16] == 0.0);
}
