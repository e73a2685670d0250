#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "grpolab/dataset.hpp"
#include "grpolab/eval.hpp"
#include "grpolab/grpo.hpp"
#include "grpolab/hcm.hpp"

namespace grpolab {

enum class Algorithm { sft_only, grpo, dpa_grpo, hcm_grpo };

std::string_view to_string(Algorithm a);
Algorithm algorithm_from_string(std::string_view s);

// Two sequential cold-start stages: stage 1 fits the noisy teacher targets
// on the pseudo-label split, stage 2 fits the clean targets on the training
// split. The caption analog is an auxiliary head predicting the dimension
// tag from features; it shares no parameters with the verdict policy and is
// logged, not kept.
struct SftConfig {
  int stage1_epochs = 5;
  int stage2_epochs = 5;
  double learning_rate = 0.05;
  int batch_size = 8;
  bool use_caption_data = true;
  bool use_weak_cot = true;
  bool use_answer_cot = true;
};

struct RlConfig {
  int group_size = 4;
  double kl_beta = 0.04;
  double clip_epsilon = 0.2;
  double learning_rate = 0.02;
  int epochs = 5;  // 0 skips the RL stage entirely
  int batch_size = 8;
  SamplingConfig sampling;
};

struct HcmConfig {
  int warm_epochs = 3;
  int mined_epochs = 2;
  CompositionKind composition = CompositionKind::full_plus_hard;
  // Extra-sample count for full_plus_random; 0 means "match the mined hard
  // count", which is the control the composition table wants.
  std::int64_t random_k = 0;
};

struct EvalSettings {
  bool include_random_baseline = true;
};

struct ExperimentConfig {
  std::uint64_t seed = 7;
  Algorithm algorithm = Algorithm::hcm_grpo;
  std::string out_dir;
  GenConfig generation;
  SftConfig sft;
  RlConfig rl;
  HcmConfig hcm;
  EvalSettings evaluation;

  void validate() const;
};

// Every field explicit, so the file a run writes back fully describes it.
std::string experiment_config_json(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const std::string& text);
void save_experiment_config(const std::string& path,
                            const ExperimentConfig& config);
ExperimentConfig load_experiment_config(const std::string& path);

struct PipelineResult {
  std::filesystem::path run_dir;
  ScoreReport report;
  std::optional<double> random_baseline;
  std::string dataset_fingerprint;
  std::int64_t easy_count = 0;
  std::int64_t hard_count = 0;
  PolicyParams final_params;
};

// generate -> SFT stage 1 -> SFT stage 2 -> mine -> RL -> evaluate.
// Writes config.json, dataset.jsonl, sft1.json, sft2.json, partition.json,
// final.json, metrics.csv, and report.json into config.out_dir. Any stage
// failure rethrows with the stage name prefixed; artifacts written by
// earlier stages stay put. Deterministic per (config, seed).
PipelineResult run_pipeline(const ExperimentConfig& config,
                            std::ostream* log = nullptr);

enum class AblationSuite { algorithms, cot_sources, compositions };

std::string_view to_string(AblationSuite s);
AblationSuite suite_from_string(std::string_view s);

struct AblationRow {
  std::string variant;
  std::string label;
  std::vector<double> scores;  // final overall score per seed, in seed order
  double mean_score = 0.0;
  double std_score = 0.0;  // sample standard deviation, 0 for one seed
};

struct AblationResult {
  std::filesystem::path csv_path;
  std::vector<AblationRow> rows;
};

std::string ablation_csv(std::span<const AblationRow> rows);

// Runs every variant of the suite over the shared seed list (one pipeline
// per variant per seed, under out_dir/<variant>/seed_<seed>), asserting
// that all variants of a seed saw the identical dataset, and writes
// ablation.csv. Variants differ from the base config only in the factor
// the suite studies.
AblationResult run_ablation(AblationSuite suite, const ExperimentConfig& base,
                            std::span<const std::uint64_t> seeds,
                            const std::string& out_dir,
                            std::ostream* log = nullptr);

}  // namespace grpolab
