// Command-line front end. Subcommands mirror the pipeline stages so a run
// can be driven end-to-end (`pipeline`, `ablate`) or stage-by-stage
// (`gen-data` -> `sft` -> `mine` -> `train` -> `eval`) with byte-identical
// artifacts either way. Exit codes: 0 success, 1 usage error, 2 runtime
// failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "grpolab/dataset.hpp"
#include "grpolab/eval.hpp"
#include "grpolab/experiment.hpp"
#include "grpolab/format.hpp"
#include "grpolab/grpo.hpp"
#include "grpolab/hcm.hpp"
#include "grpolab/policy.hpp"
#include "grpolab/rng.hpp"

namespace fs = std::filesystem;
using namespace grpolab;

namespace {

// --config/--seed pair shared by the config-driven subcommands. The seed
// flag overrides the file's seed so sweeps don't need one file per seed.
struct CommonConfig {
  std::string config_path;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;

  void attach(CLI::App* sub) {
    sub->add_option("--config", config_path,
                    "Experiment config JSON (defaults when omitted)");
    seed_opt = sub->add_option("--seed", seed, "Master seed override");
  }

  ExperimentConfig resolve() const {
    ExperimentConfig cfg;
    if (!config_path.empty()) cfg = load_experiment_config(config_path);
    if (seed_opt != nullptr && seed_opt->count() > 0) cfg.seed = seed;
    return cfg;
  }
};

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

int infer_feature_dim(const DatasetSplits& splits) {
  for (const auto* split : {&splits.training, &splits.testing,
                            &splits.pseudo_label, &splits.exploration}) {
    if (!split->empty()) return static_cast<int>(split->front().features.size());
  }
  throw std::runtime_error("dataset is empty");
}

std::vector<SftExample> sft_examples(std::span<const Task> tasks) {
  std::vector<SftExample> out;
  out.reserve(tasks.size());
  for (const Task& t : tasks) {
    if (!t.target) {
      throw std::runtime_error("sft: task " + std::to_string(t.id) +
                               " has no target");
    }
    out.push_back({t.features, t.target->cls()});
  }
  return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
  std::vector<std::uint64_t> seeds;
  std::size_t begin = 0;
  while (begin <= csv.size()) {
    std::size_t end = csv.find(',', begin);
    if (end == std::string::npos) end = csv.size();
    std::string item = csv.substr(begin, end - begin);
    std::size_t consumed = 0;
    std::uint64_t value = 0;
    try {
      value = std::stoull(item, &consumed);
    } catch (const std::exception&) {
      throw std::runtime_error("bad seed list entry: '" + item + "'");
    }
    if (consumed != item.size()) {
      throw std::runtime_error("bad seed list entry: '" + item + "'");
    }
    seeds.push_back(value);
    begin = end + 1;
    if (end == csv.size()) break;
  }
  return seeds;
}

void cmd_gen_data(const CommonConfig& common, const std::string& out) {
  ExperimentConfig cfg = common.resolve();
  cfg.generation.validate();
  DatasetSplits splits = generate_dataset(
      cfg.generation, derive_seed(cfg.seed, {fnv1a64("data")}));
  save_jsonl(out, splits);
  std::size_t total = splits.training.size() + splits.testing.size() +
                      splits.pseudo_label.size() + splits.exploration.size();
  std::cout << "wrote " << out << " tasks=" << total << " fingerprint="
            << dataset_fingerprint(splits) << "\n";
}

void cmd_sft(const CommonConfig& common, const std::string& data,
             const std::string& init, const std::string& stage,
             const std::string& out) {
  ExperimentConfig cfg = common.resolve();
  DatasetSplits splits = load_jsonl(data);
  fs::create_directories(out);

  PolicyParams params;
  if (!init.empty()) {
    params = load_checkpoint(init);
  } else {
    params = PolicyParams::zeros(infer_feature_dim(splits));
    params.seed = cfg.seed;
  }

  // The caption-analog head trains no policy parameters and writes no
  // artifact, so the standalone command skips it; `pipeline` exercises it.
  if (stage == "1" || stage == "both") {
    if (cfg.sft.use_weak_cot) {
      auto examples = sft_examples(splits.pseudo_label);
      auto r = sft_train(std::move(params), examples, cfg.sft.stage1_epochs,
                         cfg.sft.batch_size, cfg.sft.learning_rate,
                         derive_seed(cfg.seed, {fnv1a64("sft1")}));
      params = std::move(r.params);
      if (!r.epoch_losses.empty()) {
        std::cout << "[sft1] final epoch loss "
                  << format_double(r.epoch_losses.back()) << "\n";
      }
    }
    params.stage = "sft1";
    save_checkpoint((fs::path(out) / "sft1.json").string(), params);
  }
  if (stage == "2" || stage == "both") {
    if (cfg.sft.use_answer_cot) {
      auto examples = sft_examples(splits.training);
      auto r = sft_train(std::move(params), examples, cfg.sft.stage2_epochs,
                         cfg.sft.batch_size, cfg.sft.learning_rate,
                         derive_seed(cfg.seed, {fnv1a64("sft2")}));
      params = std::move(r.params);
      if (!r.epoch_losses.empty()) {
        std::cout << "[sft2] final epoch loss "
                  << format_double(r.epoch_losses.back()) << "\n";
      }
    }
    params.stage = "sft2";
    save_checkpoint((fs::path(out) / "sft2.json").string(), params);
  }
}

void cmd_mine(const std::string& checkpoint, const std::string& data,
              const std::string& out) {
  PolicyParams params = load_checkpoint(checkpoint);
  DatasetSplits splits = load_jsonl(data);
  CasePartition partition = identify_cases(params, splits.training);
  save_partition(out, partition);
  std::cout << "easy " << partition.easy.size() << " hard "
            << partition.hard.size() << "\n";
}

void cmd_train(const CommonConfig& common, const std::string& data,
               const std::string& init, const std::string& algo_name,
               const std::string& partition_path, const std::string& out) {
  ExperimentConfig cfg = common.resolve();
  if (!algo_name.empty()) cfg.algorithm = algorithm_from_string(algo_name);
  if (cfg.algorithm == Algorithm::sft_only) {
    throw std::runtime_error("train: sft_only has no RL stage; pass --algo");
  }
  cfg.validate();

  DatasetSplits splits = load_jsonl(data);
  PolicyParams params = load_checkpoint(init);

  TrainConfig tc;
  tc.algorithm = cfg.algorithm == Algorithm::grpo ? RlAlgorithm::grpo
                                                  : RlAlgorithm::dpa_grpo;
  tc.group_size = cfg.rl.group_size;
  tc.kl_beta = cfg.rl.kl_beta;
  tc.clip_epsilon = cfg.rl.clip_epsilon;
  tc.learning_rate = cfg.rl.learning_rate;
  tc.epochs = cfg.rl.epochs;
  tc.batch_size = cfg.rl.batch_size;
  tc.sampling = cfg.rl.sampling;
  tc.seed = derive_seed(cfg.seed, {fnv1a64("rl")});

  EpochPlan plan;
  if (cfg.algorithm == Algorithm::hcm_grpo) {
    if (partition_path.empty()) {
      throw std::runtime_error("train: --partition is required for hcm_grpo");
    }
    CasePartition partition = load_partition(partition_path);
    std::size_t random_k =
        cfg.hcm.random_k > 0 ? static_cast<std::size_t>(cfg.hcm.random_k)
                             : partition.hard.size();
    auto mined =
        composition(cfg.hcm.composition, partition, splits.training, random_k,
                    derive_seed(cfg.seed, {fnv1a64("composition")}));
    plan = plan_with_mined_data(splits.training, mined, cfg.hcm.warm_epochs,
                                cfg.hcm.mined_epochs,
                                derive_seed(cfg.seed, {fnv1a64("plan")}));
  } else {
    plan = plan_with_mined_data(splits.training, {}, cfg.rl.epochs, 0,
                                derive_seed(cfg.seed, {fnv1a64("plan")}));
  }

  TrainResult result = train(splits, std::move(params), tc, plan.epochs);
  result.params.stage = "final";
  fs::create_directories(out);
  save_checkpoint((fs::path(out) / "final.json").string(), result.params);
  write_text_file(fs::path(out) / "metrics.csv", result.metrics.csv());
  if (!result.metrics.rows.empty()) {
    std::cout << "[rl] final batch eval "
              << format_double(result.metrics.rows.back().eval_overall)
              << "\n";
  }
}

void cmd_eval(const std::string& checkpoint, const std::string& data,
              const std::string& out, bool no_baseline) {
  PolicyParams params = load_checkpoint(checkpoint);
  DatasetSplits splits = load_jsonl(data);
  ScoreReport report = evaluate(params, splits.testing);
  std::optional<double> baseline;
  if (!no_baseline) {
    baseline = random_baseline(answer_size_histogram(splits.testing));
  }
  std::string text = report_json(report, baseline);
  if (!out.empty()) write_text_file(out, text);
  std::cout << text;
}

void cmd_pipeline(const CommonConfig& common, const std::string& algo_name,
                  const std::string& out) {
  ExperimentConfig cfg = common.resolve();
  if (!algo_name.empty()) cfg.algorithm = algorithm_from_string(algo_name);
  if (!out.empty()) cfg.out_dir = out;
  run_pipeline(cfg, &std::cout);
}

void cmd_ablate(const CommonConfig& common, const std::string& suite_name,
                const std::string& seeds_csv, int num_seeds,
                const std::string& out) {
  ExperimentConfig cfg = common.resolve();
  std::vector<std::uint64_t> seeds;
  if (!seeds_csv.empty()) {
    seeds = parse_seed_list(seeds_csv);
  } else {
    if (num_seeds < 1) throw std::runtime_error("ablate: --num-seeds must be >= 1");
    for (int i = 0; i < num_seeds; ++i) {
      seeds.push_back(cfg.seed + static_cast<std::uint64_t>(i));
    }
  }
  AblationResult result =
      run_ablation(suite_from_string(suite_name), cfg, seeds, out, &std::cout);
  std::cout << "wrote " << result.csv_path.string() << "\n";
}

void cmd_baseline(const std::string& data) {
  DatasetSplits splits = load_jsonl(data);
  // Prefer the held-out testing split; a file without one is scored over
  // its labeled (non-withheld) tasks instead.
  std::span<const Task> tasks;
  if (!splits.testing.empty()) {
    tasks = splits.testing;
  } else if (!splits.training.empty()) {
    tasks = splits.training;
  } else {
    throw std::runtime_error("baseline: dataset has no labeled tasks");
  }
  auto histogram = answer_size_histogram(tasks);
  double weighted = 0.0;
  std::int64_t total = 0;
  for (const auto& [size, count] : histogram) {
    weighted += static_cast<double>(size) * static_cast<double>(count);
    total += count;
  }
  double mean_len = weighted / static_cast<double>(total);
  std::cout << "mean_len=" << format_double(mean_len) << " baseline="
            << format_double(random_baseline(histogram)) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Synthetic anomaly-verdict lab: linear policies trained with "
      "group-relative policy optimization, dense partial-credit rewards, "
      "and hard-case mining."};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  CommonConfig gen_common;
  gen_common.attach(gen);
  std::string gen_out;
  gen->add_option("--out", gen_out, "Output dataset JSONL path")->required();
  gen->callback([&] { cmd_gen_data(gen_common, gen_out); });

  auto* sft = app.add_subcommand(
      "sft", "Two-stage cold start: noisy pseudo-labels, then clean targets");
  CommonConfig sft_common;
  sft_common.attach(sft);
  std::string sft_data, sft_init, sft_stage = "both", sft_out;
  sft->add_option("--data", sft_data, "Dataset JSONL path")->required();
  sft->add_option("--init", sft_init, "Starting checkpoint (default zeros)");
  sft->add_option("--stage", sft_stage, "Which stage to run")
      ->check(CLI::IsMember({"1", "2", "both"}));
  sft->add_option("--out", sft_out, "Run directory for checkpoints")
      ->required();
  sft->callback(
      [&] { cmd_sft(sft_common, sft_data, sft_init, sft_stage, sft_out); });

  auto* mine = app.add_subcommand(
      "mine", "Partition training tasks into solved/missed for a checkpoint");
  std::string mine_checkpoint, mine_data, mine_out;
  mine->add_option("--checkpoint", mine_checkpoint, "Policy checkpoint JSON")
      ->required();
  mine->add_option("--data", mine_data, "Dataset JSONL path")->required();
  mine->add_option("--out", mine_out, "Output partition JSON path")
      ->required();
  mine->callback([&] { cmd_mine(mine_checkpoint, mine_data, mine_out); });

  auto* train_cmd = app.add_subcommand(
      "train", "RL stage: GRPO / DPA-GRPO / HCM-GRPO from a checkpoint");
  CommonConfig train_common;
  train_common.attach(train_cmd);
  std::string train_data, train_init, train_algo, train_partition, train_out;
  train_cmd->add_option("--data", train_data, "Dataset JSONL path")
      ->required();
  train_cmd->add_option("--init", train_init, "Starting checkpoint")
      ->required();
  train_cmd->add_option("--algo", train_algo, "Algorithm override")
      ->check(CLI::IsMember({"grpo", "dpa_grpo", "hcm_grpo"}));
  train_cmd->add_option("--partition", train_partition,
                        "Mined-case partition JSON (required for hcm_grpo)");
  train_cmd->add_option("--out", train_out, "Run directory for outputs")
      ->required();
  train_cmd->callback([&] {
    cmd_train(train_common, train_data, train_init, train_algo,
              train_partition, train_out);
  });

  auto* eval_cmd = app.add_subcommand(
      "eval", "Score a checkpoint on the testing split and print the report");
  std::string eval_checkpoint, eval_data, eval_out;
  bool eval_no_baseline = false;
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "Policy checkpoint")
      ->required();
  eval_cmd->add_option("--data", eval_data, "Dataset JSONL path")->required();
  eval_cmd->add_option("--out", eval_out, "Also write the report here");
  eval_cmd->add_flag("--no-baseline", eval_no_baseline,
                     "Omit the closed-form random baseline");
  eval_cmd->callback(
      [&] { cmd_eval(eval_checkpoint, eval_data, eval_out, eval_no_baseline); });

  auto* pipeline = app.add_subcommand(
      "pipeline", "Full run: generate, SFT x2, mine, RL, evaluate");
  CommonConfig pipeline_common;
  pipeline_common.attach(pipeline);
  std::string pipeline_algo, pipeline_out;
  pipeline->add_option("--algo", pipeline_algo, "Algorithm override")
      ->check(CLI::IsMember({"sft_only", "grpo", "dpa_grpo", "hcm_grpo"}));
  pipeline->add_option("--out", pipeline_out, "Run directory override");
  pipeline->callback(
      [&] { cmd_pipeline(pipeline_common, pipeline_algo, pipeline_out); });

  auto* ablate = app.add_subcommand(
      "ablate", "Run a comparison suite over shared seeds and datasets");
  CommonConfig ablate_common;
  ablate_common.attach(ablate);
  std::string ablate_suite, ablate_seeds, ablate_out;
  int ablate_num_seeds = 10;
  ablate->add_option("--suite", ablate_suite, "Which factor to vary")
      ->required()
      ->check(CLI::IsMember({"algorithms", "cot_sources", "compositions"}));
  ablate->add_option("--seeds", ablate_seeds, "Comma-separated seed list");
  ablate->add_option("--num-seeds", ablate_num_seeds,
                     "Seed count when --seeds is omitted (base seed + i)");
  ablate->add_option("--out", ablate_out, "Suite output directory")
      ->required();
  ablate->callback([&] {
    cmd_ablate(ablate_common, ablate_suite, ablate_seeds, ablate_num_seeds,
               ablate_out);
  });

  auto* baseline = app.add_subcommand(
      "baseline", "Print mean answer length and the random-guess baseline");
  std::string baseline_data;
  baseline->add_option("--data", baseline_data, "Dataset JSONL path")
      ->required();
  baseline->callback([&] { cmd_baseline(baseline_data); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
