#include "grpolab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "grpolab/format.hpp"
#include "grpolab/response.hpp"

namespace grpolab {

namespace fs = std::filesystem;

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::sft_only: return "sft_only";
    case Algorithm::grpo: return "grpo";
    case Algorithm::dpa_grpo: return "dpa_grpo";
    case Algorithm::hcm_grpo: return "hcm_grpo";
  }
  throw std::invalid_argument("bad algorithm");
}

Algorithm algorithm_from_string(std::string_view s) {
  if (s == "sft_only") return Algorithm::sft_only;
  if (s == "grpo") return Algorithm::grpo;
  if (s == "dpa_grpo") return Algorithm::dpa_grpo;
  if (s == "hcm_grpo") return Algorithm::hcm_grpo;
  throw std::runtime_error("unknown algorithm: " + std::string(s));
}

std::string_view to_string(AblationSuite s) {
  switch (s) {
    case AblationSuite::algorithms: return "algorithms";
    case AblationSuite::cot_sources: return "cot_sources";
    case AblationSuite::compositions: return "compositions";
  }
  throw std::invalid_argument("bad suite");
}

AblationSuite suite_from_string(std::string_view s) {
  if (s == "algorithms") return AblationSuite::algorithms;
  if (s == "cot_sources") return AblationSuite::cot_sources;
  if (s == "compositions") return AblationSuite::compositions;
  throw std::runtime_error("unknown suite: " + std::string(s));
}

void ExperimentConfig::validate() const {
  generation.validate();
  if (sft.stage1_epochs < 0 || sft.stage2_epochs < 0) {
    throw std::invalid_argument("config: negative SFT epochs");
  }
  if (!(sft.learning_rate > 0.0)) {
    throw std::invalid_argument("config: SFT learning rate must be positive");
  }
  if (sft.batch_size < 1) {
    throw std::invalid_argument("config: SFT batch size must be >= 1");
  }
  if (rl.group_size < 2) {
    throw std::invalid_argument("config: group_size must be >= 2");
  }
  if (rl.kl_beta < 0.0) throw std::invalid_argument("config: kl_beta must be >= 0");
  if (!(rl.clip_epsilon > 0.0) || rl.clip_epsilon >= 1.0) {
    throw std::invalid_argument("config: clip_epsilon must be in (0, 1)");
  }
  if (!(rl.learning_rate > 0.0)) {
    throw std::invalid_argument("config: RL learning rate must be positive");
  }
  if (rl.epochs < 0) throw std::invalid_argument("config: negative RL epochs");
  if (rl.batch_size < 1) {
    throw std::invalid_argument("config: RL batch size must be >= 1");
  }
  rl.sampling.validate();
  if (hcm.warm_epochs < 0 || hcm.mined_epochs < 0) {
    throw std::invalid_argument("config: negative HCM epochs");
  }
  if (hcm.random_k < 0) {
    throw std::invalid_argument("config: random_k must be >= 0");
  }
  if (algorithm == Algorithm::hcm_grpo && rl.epochs > 0 &&
      hcm.warm_epochs + hcm.mined_epochs != rl.epochs) {
    throw std::invalid_argument(
        "config: hcm warm_epochs + mined_epochs must equal rl.epochs");
  }
}

std::string experiment_config_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["algorithm"] = std::string(to_string(c.algorithm));
  j["out_dir"] = c.out_dir;

  nlohmann::ordered_json g;
  g["feature_dim"] = c.generation.feature_dim;
  g["train_size"] = c.generation.train_size;
  g["test_size"] = c.generation.test_size;
  g["pseudo_size"] = c.generation.pseudo_size;
  g["exploration_size"] = c.generation.exploration_size;
  g["answer_length_weights"] = c.generation.answer_length_weights;
  g["hard_fraction"] = c.generation.hard_fraction;
  g["sigma_easy"] = c.generation.sigma_easy;
  g["sigma_hard"] = c.generation.sigma_hard;
  g["confounder_shift"] = c.generation.confounder_shift;
  g["teacher_accuracy"] = c.generation.teacher_accuracy;
  g["normal_patterns"] = c.generation.normal_patterns;
  j["generation"] = g;

  nlohmann::ordered_json s;
  s["stage1_epochs"] = c.sft.stage1_epochs;
  s["stage2_epochs"] = c.sft.stage2_epochs;
  s["learning_rate"] = c.sft.learning_rate;
  s["batch_size"] = c.sft.batch_size;
  s["use_caption_data"] = c.sft.use_caption_data;
  s["use_weak_cot"] = c.sft.use_weak_cot;
  s["use_answer_cot"] = c.sft.use_answer_cot;
  j["sft"] = s;

  nlohmann::ordered_json r;
  r["group_size"] = c.rl.group_size;
  r["kl_beta"] = c.rl.kl_beta;
  r["clip_epsilon"] = c.rl.clip_epsilon;
  r["learning_rate"] = c.rl.learning_rate;
  r["epochs"] = c.rl.epochs;
  r["batch_size"] = c.rl.batch_size;
  nlohmann::ordered_json sp;
  sp["temperature"] = c.rl.sampling.temperature;
  sp["top_k"] = c.rl.sampling.top_k;
  sp["top_p"] = c.rl.sampling.top_p;
  r["sampling"] = sp;
  j["rl"] = r;

  nlohmann::ordered_json h;
  h["warm_epochs"] = c.hcm.warm_epochs;
  h["mined_epochs"] = c.hcm.mined_epochs;
  h["composition"] = std::string(to_string(c.hcm.composition));
  h["random_k"] = c.hcm.random_k;
  j["hcm"] = h;

  nlohmann::ordered_json e;
  e["include_random_baseline"] = c.evaluation.include_random_baseline;
  j["evaluation"] = e;
  return j.dump(2) + "\n";
}

namespace {

void check_keys(const nlohmann::json& j,
                std::initializer_list<std::string_view> allowed,
                const char* where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      throw std::runtime_error("config: unknown key '" + it.key() + "' in " +
                               where);
    }
  }
}

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig experiment_config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) {
    throw std::runtime_error("config: top level must be an object");
  }

  ExperimentConfig c;
  try {
    check_keys(j,
               {"seed", "algorithm", "out_dir", "generation", "sft", "rl",
                "hcm", "evaluation"},
               "top level");
    read_field(j, "seed", c.seed);
    if (j.contains("algorithm")) {
      c.algorithm = algorithm_from_string(j.at("algorithm").get<std::string>());
    }
    read_field(j, "out_dir", c.out_dir);

    if (j.contains("generation")) {
      const auto& g = j.at("generation");
      check_keys(g,
                 {"feature_dim", "train_size", "test_size", "pseudo_size",
                  "exploration_size", "answer_length_weights", "hard_fraction",
                  "sigma_easy", "sigma_hard", "confounder_shift",
                  "teacher_accuracy", "normal_patterns"},
                 "generation");
      read_field(g, "feature_dim", c.generation.feature_dim);
      read_field(g, "train_size", c.generation.train_size);
      read_field(g, "test_size", c.generation.test_size);
      read_field(g, "pseudo_size", c.generation.pseudo_size);
      read_field(g, "exploration_size", c.generation.exploration_size);
      if (g.contains("answer_length_weights")) {
        auto v = g.at("answer_length_weights").get<std::vector<double>>();
        if (v.size() != c.generation.answer_length_weights.size()) {
          throw std::runtime_error("config: answer_length_weights needs 5 entries");
        }
        std::copy(v.begin(), v.end(), c.generation.answer_length_weights.begin());
      }
      read_field(g, "hard_fraction", c.generation.hard_fraction);
      read_field(g, "sigma_easy", c.generation.sigma_easy);
      read_field(g, "sigma_hard", c.generation.sigma_hard);
      read_field(g, "confounder_shift", c.generation.confounder_shift);
      read_field(g, "teacher_accuracy", c.generation.teacher_accuracy);
      read_field(g, "normal_patterns", c.generation.normal_patterns);
    }

    if (j.contains("sft")) {
      const auto& s = j.at("sft");
      check_keys(s,
                 {"stage1_epochs", "stage2_epochs", "learning_rate",
                  "batch_size", "use_caption_data", "use_weak_cot",
                  "use_answer_cot"},
                 "sft");
      read_field(s, "stage1_epochs", c.sft.stage1_epochs);
      read_field(s, "stage2_epochs", c.sft.stage2_epochs);
      read_field(s, "learning_rate", c.sft.learning_rate);
      read_field(s, "batch_size", c.sft.batch_size);
      read_field(s, "use_caption_data", c.sft.use_caption_data);
      read_field(s, "use_weak_cot", c.sft.use_weak_cot);
      read_field(s, "use_answer_cot", c.sft.use_answer_cot);
    }

    if (j.contains("rl")) {
      const auto& r = j.at("rl");
      check_keys(r,
                 {"group_size", "kl_beta", "clip_epsilon", "learning_rate",
                  "epochs", "batch_size", "sampling"},
                 "rl");
      read_field(r, "group_size", c.rl.group_size);
      read_field(r, "kl_beta", c.rl.kl_beta);
      read_field(r, "clip_epsilon", c.rl.clip_epsilon);
      read_field(r, "learning_rate", c.rl.learning_rate);
      read_field(r, "epochs", c.rl.epochs);
      read_field(r, "batch_size", c.rl.batch_size);
      if (r.contains("sampling")) {
        const auto& sp = r.at("sampling");
        check_keys(sp, {"temperature", "top_k", "top_p"}, "rl.sampling");
        read_field(sp, "temperature", c.rl.sampling.temperature);
        read_field(sp, "top_k", c.rl.sampling.top_k);
        read_field(sp, "top_p", c.rl.sampling.top_p);
      }
    }

    if (j.contains("hcm")) {
      const auto& h = j.at("hcm");
      check_keys(h, {"warm_epochs", "mined_epochs", "composition", "random_k"},
                 "hcm");
      read_field(h, "warm_epochs", c.hcm.warm_epochs);
      read_field(h, "mined_epochs", c.hcm.mined_epochs);
      if (h.contains("composition")) {
        c.hcm.composition =
            composition_from_string(h.at("composition").get<std::string>());
      }
      read_field(h, "random_k", c.hcm.random_k);
    }

    if (j.contains("evaluation")) {
      const auto& e = j.at("evaluation");
      check_keys(e, {"include_random_baseline"}, "evaluation");
      read_field(e, "include_random_baseline",
                 c.evaluation.include_random_baseline);
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("config: bad field: ") + e.what());
  }
  return c;
}

void save_experiment_config(const std::string& path,
                            const ExperimentConfig& config) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save config: cannot open " + path);
  out << experiment_config_json(config);
  if (!out) throw std::runtime_error("save config: write failed: " + path);
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load config: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return experiment_config_from_json(text);
}

namespace {

template <typename F>
auto run_stage(const char* name, F&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string(name) + ": " + e.what());
  }
}

std::vector<SftExample> sft_examples(std::span<const Task> tasks) {
  std::vector<SftExample> out;
  out.reserve(tasks.size());
  for (const Task& t : tasks) {
    if (!t.target) {
      throw std::invalid_argument("sft: task " + std::to_string(t.id) +
                                  " has no target");
    }
    out.push_back({t.features, t.target->cls()});
  }
  return out;
}

// Caption-analog auxiliary head: softmax regression from features to the
// dimension tag. Its parameters are disjoint from the verdict policy (a
// linear model has nothing to share), so this stage exercises the data
// source without moving the policy; the final loss is reported for the log.
double train_dimension_head(int feature_dim, std::span<const Task> tasks,
                            int epochs, int batch_size, double lr,
                            std::uint64_t seed) {
  if (tasks.empty()) throw std::invalid_argument("caption head: no tasks");
  const int n_cls = kDimensionCount;
  std::vector<double> w(static_cast<std::size_t>(n_cls) * feature_dim, 0.0);
  std::vector<double> b(n_cls, 0.0);
  std::vector<std::size_t> order(tasks.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  double last_loss = std::log(static_cast<double>(n_cls));
  for (int e = 0; e < epochs; ++e) {
    Rng rng(derive_seed(seed, {fnv1a64("caption_shuffle"),
                               static_cast<std::uint64_t>(e)}));
    rng.shuffle(order);
    double epoch_loss = 0.0;
    int batches = 0;
    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(batch_size)) {
      std::size_t end = std::min(order.size(),
                                 begin + static_cast<std::size_t>(batch_size));
      std::vector<double> gw(w.size(), 0.0), gb(b.size(), 0.0);
      double loss = 0.0;
      for (std::size_t i = begin; i < end; ++i) {
        const Task& t = tasks[order[i]];
        std::vector<double> logit(n_cls);
        for (int cls = 0; cls < n_cls; ++cls) {
          double acc = b[static_cast<std::size_t>(cls)];
          const double* row = w.data() + static_cast<std::size_t>(cls) * feature_dim;
          for (int k = 0; k < feature_dim; ++k) acc += row[k] * t.features[static_cast<std::size_t>(k)];
          logit[static_cast<std::size_t>(cls)] = acc;
        }
        auto ls = log_softmax(logit);
        int target = static_cast<int>(t.dimension);
        loss -= ls[static_cast<std::size_t>(target)];
        for (int cls = 0; cls < n_cls; ++cls) {
          double coeff = std::exp(ls[static_cast<std::size_t>(cls)]) -
                         (cls == target ? 1.0 : 0.0);
          gb[static_cast<std::size_t>(cls)] += coeff;
          double* row = gw.data() + static_cast<std::size_t>(cls) * feature_dim;
          for (int k = 0; k < feature_dim; ++k) {
            row[k] += coeff * t.features[static_cast<std::size_t>(k)];
          }
        }
      }
      const double inv = 1.0 / static_cast<double>(end - begin);
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * inv * gw[i];
      for (std::size_t i = 0; i < b.size(); ++i) b[i] -= lr * inv * gb[i];
      epoch_loss += loss * inv;
      ++batches;
    }
    last_loss = epoch_loss / batches;
  }
  return last_loss;
}

std::int64_t resolve_random_k(const HcmConfig& hcm,
                              const CasePartition& partition) {
  return hcm.random_k > 0 ? hcm.random_k
                          : static_cast<std::int64_t>(partition.hard.size());
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

PipelineResult run_pipeline(const ExperimentConfig& config, std::ostream* log) {
  config.validate();
  if (config.out_dir.empty()) {
    throw std::invalid_argument("pipeline: out_dir must be set");
  }
  fs::path dir(config.out_dir);
  fs::create_directories(dir);
  save_experiment_config((dir / "config.json").string(), config);

  PipelineResult result;
  result.run_dir = dir;

  DatasetSplits splits = run_stage("generate", [&] {
    DatasetSplits s = generate_dataset(
        config.generation, derive_seed(config.seed, {fnv1a64("data")}));
    save_jsonl((dir / "dataset.jsonl").string(), s);
    return s;
  });
  result.dataset_fingerprint = dataset_fingerprint(splits);
  if (log) {
    *log << "[generate] fingerprint " << result.dataset_fingerprint << "\n";
  }

  PolicyParams params = run_stage("sft_stage1", [&] {
    PolicyParams p = PolicyParams::zeros(config.generation.feature_dim);
    p.seed = config.seed;
    if (config.sft.use_weak_cot) {
      auto data = sft_examples(splits.pseudo_label);
      auto r = sft_train(std::move(p), data, config.sft.stage1_epochs,
                         config.sft.batch_size, config.sft.learning_rate,
                         derive_seed(config.seed, {fnv1a64("sft1")}));
      p = std::move(r.params);
      if (log && !r.epoch_losses.empty()) {
        *log << "[sft1] final epoch loss "
             << format_double(r.epoch_losses.back()) << "\n";
      }
    }
    if (config.sft.use_caption_data) {
      double aux = train_dimension_head(
          config.generation.feature_dim, splits.pseudo_label,
          config.sft.stage1_epochs, config.sft.batch_size,
          config.sft.learning_rate,
          derive_seed(config.seed, {fnv1a64("caption")}));
      if (log) *log << "[sft1] caption head loss " << format_double(aux) << "\n";
    }
    p.stage = "sft1";
    save_checkpoint((dir / "sft1.json").string(), p);
    return p;
  });

  params = run_stage("sft_stage2", [&] {
    PolicyParams p = std::move(params);
    if (config.sft.use_answer_cot) {
      auto data = sft_examples(splits.training);
      auto r = sft_train(std::move(p), data, config.sft.stage2_epochs,
                         config.sft.batch_size, config.sft.learning_rate,
                         derive_seed(config.seed, {fnv1a64("sft2")}));
      p = std::move(r.params);
      if (log && !r.epoch_losses.empty()) {
        *log << "[sft2] final epoch loss "
             << format_double(r.epoch_losses.back()) << "\n";
      }
    }
    p.stage = "sft2";
    save_checkpoint((dir / "sft2.json").string(), p);
    return p;
  });

  CasePartition partition = run_stage("mine", [&] {
    CasePartition part = identify_cases(params, splits.training);
    save_partition((dir / "partition.json").string(), part);
    return part;
  });
  result.easy_count = static_cast<std::int64_t>(partition.easy.size());
  result.hard_count = static_cast<std::int64_t>(partition.hard.size());
  if (log) {
    *log << "[mine] easy " << result.easy_count << " hard "
         << result.hard_count << "\n";
  }

  PolicyParams final_params = run_stage("rl", [&] {
    PolicyParams p = params;
    MetricsLog metrics;
    if (config.algorithm != Algorithm::sft_only && config.rl.epochs > 0) {
      TrainConfig tc;
      tc.algorithm = config.algorithm == Algorithm::grpo ? RlAlgorithm::grpo
                                                         : RlAlgorithm::dpa_grpo;
      tc.group_size = config.rl.group_size;
      tc.kl_beta = config.rl.kl_beta;
      tc.clip_epsilon = config.rl.clip_epsilon;
      tc.learning_rate = config.rl.learning_rate;
      tc.epochs = config.rl.epochs;
      tc.batch_size = config.rl.batch_size;
      tc.sampling = config.rl.sampling;
      tc.seed = derive_seed(config.seed, {fnv1a64("rl")});

      EpochPlan plan;
      if (config.algorithm == Algorithm::hcm_grpo) {
        auto mined = composition(
            config.hcm.composition, partition, splits.training,
            static_cast<std::size_t>(resolve_random_k(config.hcm, partition)),
            derive_seed(config.seed, {fnv1a64("composition")}));
        plan = plan_with_mined_data(splits.training, mined,
                                    config.hcm.warm_epochs,
                                    config.hcm.mined_epochs,
                                    derive_seed(config.seed, {fnv1a64("plan")}));
      } else {
        plan = plan_with_mined_data(splits.training, {}, config.rl.epochs, 0,
                                    derive_seed(config.seed, {fnv1a64("plan")}));
      }
      TrainResult tr = train(splits, std::move(p), tc, plan.epochs);
      p = std::move(tr.params);
      metrics = std::move(tr.metrics);
      if (log && !metrics.rows.empty()) {
        *log << "[rl] final batch eval "
             << format_double(metrics.rows.back().eval_overall) << "\n";
      }
    }
    p.stage = "final";
    save_checkpoint((dir / "final.json").string(), p);
    write_text_file(dir / "metrics.csv", metrics.csv());
    return p;
  });

  run_stage("evaluate", [&] {
    result.report = evaluate(final_params, splits.testing);
    if (config.evaluation.include_random_baseline) {
      result.random_baseline =
          random_baseline(answer_size_histogram(splits.testing));
    }
    write_text_file(dir / "report.json",
                    report_json(result.report, result.random_baseline));
    return 0;
  });
  if (log) {
    *log << "[evaluate] overall " << format_double(result.report.overall)
         << "\n";
  }

  result.final_params = std::move(final_params);
  return result;
}

namespace {

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

std::string composition_label(CompositionKind kind, std::int64_t full_size,
                              std::int64_t easy, std::int64_t hard,
                              std::int64_t random_k) {
  switch (kind) {
    case CompositionKind::hard_only:
      return std::to_string(hard) + " Hard Cases Only";
    case CompositionKind::easy_only:
      return std::to_string(easy) + " Easy Cases Only";
    case CompositionKind::full_only:
      return "All " + std::to_string(full_size) + " Samples (DPA-GRPO)";
    case CompositionKind::full_plus_random:
      return "All " + std::to_string(full_size) + " Samples + " +
             std::to_string(random_k) + " Random Samples";
    case CompositionKind::full_plus_hard:
      return "All " + std::to_string(full_size) + " Samples + " +
             std::to_string(hard) + " Hard Cases (HCM-GRPO)";
  }
  throw std::invalid_argument("bad composition kind");
}

}  // namespace

std::string ablation_csv(std::span<const AblationRow> rows) {
  std::string out = "variant,label,mean_score,std_score,num_seeds\n";
  for (const AblationRow& r : rows) {
    out += csv_escape(r.variant);
    out += ',';
    out += csv_escape(r.label);
    out += ',';
    out += format_double(r.mean_score);
    out += ',';
    out += format_double(r.std_score);
    out += ',';
    out += std::to_string(r.scores.size());
    out += '\n';
  }
  return out;
}

AblationResult run_ablation(AblationSuite suite, const ExperimentConfig& base,
                            std::span<const std::uint64_t> seeds,
                            const std::string& out_dir, std::ostream* log) {
  if (seeds.empty()) throw std::invalid_argument("ablation: empty seed list");
  base.validate();
  fs::path root(out_dir);
  fs::create_directories(root);

  struct Variant {
    std::string name;
    std::string label;
    ExperimentConfig config;
  };
  std::vector<Variant> variants;
  switch (suite) {
    case AblationSuite::algorithms: {
      const std::pair<Algorithm, const char*> cells[] = {
          {Algorithm::sft_only, "SFT"},
          {Algorithm::grpo, "+GRPO"},
          {Algorithm::dpa_grpo, "+DPA-GRPO"},
          {Algorithm::hcm_grpo, "+HCM-GRPO"},
      };
      for (const auto& [algo, label] : cells) {
        ExperimentConfig c = base;
        c.algorithm = algo;
        variants.push_back({std::string(to_string(algo)), label, c});
      }
      break;
    }
    case AblationSuite::cot_sources: {
      struct Cell {
        const char* name;
        bool caption, weak, answer;
        const char* label;
      };
      const Cell cells[] = {
          {"exp1", false, true, false, "Exp1: weak CoT"},
          {"exp2", true, true, false, "Exp2: caption + weak CoT"},
          {"exp3", false, false, true, "Exp3: answer CoT"},
          {"exp4", true, true, true, "Exp4: caption + weak + answer CoT"},
      };
      for (const Cell& cell : cells) {
        ExperimentConfig c = base;
        c.algorithm = Algorithm::sft_only;
        c.sft.use_caption_data = cell.caption;
        c.sft.use_weak_cot = cell.weak;
        c.sft.use_answer_cot = cell.answer;
        variants.push_back({cell.name, cell.label, c});
      }
      break;
    }
    case AblationSuite::compositions: {
      const CompositionKind kinds[] = {
          CompositionKind::hard_only, CompositionKind::easy_only,
          CompositionKind::full_only, CompositionKind::full_plus_random,
          CompositionKind::full_plus_hard,
      };
      for (CompositionKind k : kinds) {
        ExperimentConfig c = base;
        c.algorithm = Algorithm::hcm_grpo;
        c.hcm.composition = k;
        variants.push_back({std::string(to_string(k)), "", c});
      }
      break;
    }
  }

  std::map<std::uint64_t, std::string> fingerprints;
  std::vector<AblationRow> rows;
  for (const Variant& v : variants) {
    AblationRow row;
    row.variant = v.name;
    row.label = v.label;
    for (std::size_t si = 0; si < seeds.size(); ++si) {
      ExperimentConfig c = v.config;
      c.seed = seeds[si];
      c.out_dir =
          (root / v.name / ("seed_" + std::to_string(seeds[si]))).string();
      PipelineResult r = run_pipeline(c, nullptr);
      row.scores.push_back(r.report.overall);
      if (log) {
        *log << "[ablate] " << v.name << " seed " << seeds[si] << " score "
             << format_double(r.report.overall) << "\n";
      }
      auto [it, inserted] =
          fingerprints.try_emplace(seeds[si], r.dataset_fingerprint);
      if (!inserted && it->second != r.dataset_fingerprint) {
        throw std::runtime_error(
            "ablation: variants disagree on the dataset for seed " +
            std::to_string(seeds[si]));
      }
      if (si == 0 && suite == AblationSuite::compositions) {
        row.label = composition_label(
            v.config.hcm.composition, base.generation.train_size,
            r.easy_count, r.hard_count,
            v.config.hcm.random_k > 0 ? v.config.hcm.random_k : r.hard_count);
      }
    }
    double mean = 0.0;
    for (double s : row.scores) mean += s;
    mean /= static_cast<double>(row.scores.size());
    double var = 0.0;
    for (double s : row.scores) var += (s - mean) * (s - mean);
    row.mean_score = mean;
    row.std_score = row.scores.size() > 1
                        ? std::sqrt(var / static_cast<double>(row.scores.size() - 1))
                        : 0.0;
    rows.push_back(std::move(row));
  }

  AblationResult result;
  result.csv_path = root / "ablation.csv";
  result.rows = std::move(rows);
  write_text_file(result.csv_path, ablation_csv(result.rows));
  return result;
}

}  // namespace grpolab
