#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "grpolab/task.hpp"

namespace grpolab {

// Synthetic environment configuration. Tasks are drawn around 16 class
// embeddings (one per verdict class). Each option letter gets a base
// direction; a class mean is the sqrt-size-normalized sum of its letters'
// directions plus a small class-distinct offset, so classes sharing letters
// crowd together while single-letter presence stays decodable. The none
// class has no letters; it sits a short step from the all-options class,
// giving one boundary that stays contested throughout training.
//
//   easy:  x = E[c] + sigma_easy * xi
//   hard:  x = E[c] + confounder_shift * (E[conf(c)] - E[c])
//              + sigma_hard * xi
//
// where conf(c) is the nearest wrong class that shares a letter with c
// without containing it (falling back to any letter-sharing class, then to
// the nearest wrong class). Shared letters keep partial credit flowing on
// planted-hard tasks; non-containment means answering c exactly is wrong
// for the neighbor, so hard clusters genuinely compete with nearby easy
// ones. Hard tasks sit partway toward the confusable class and carry wider
// noise; they are the planted subpopulation hard-case mining is meant to
// find.
struct GenConfig {
  int feature_dim = 8;
  std::int64_t train_size = 1044;
  std::int64_t test_size = 468;
  std::int64_t pseudo_size = 10724;
  std::int64_t exploration_size = 115809;

  // Verdict categories in order: letter sets of size 1..4, then N.
  // Within each split the category counts follow these weights exactly
  // (largest-remainder rounding), not a per-task draw, so the realized
  // answer-length mix is pinned.
  std::array<double, 5> answer_length_weights = {0.4164, 0.3386, 0.06, 0.085,
                                                 0.10};

  double hard_fraction = 0.3;
  double sigma_easy = 0.3;
  double sigma_hard = 1.2;
  double confounder_shift = 0.5;

  // Probability that the pseudo-label teacher emits the true verdict;
  // otherwise it picks uniformly among the 15 wrong classes.
  double teacher_accuracy = 0.3825;

  // Canonical verdict strings whose tasks are tagged dimension "normal"
  // (nothing wrong with the sample). Everything else gets a uniformly
  // random defect dimension.
  std::vector<std::string> normal_patterns = {"ABCD"};

  void validate() const;
};

DatasetSplits generate_dataset(const GenConfig& config, std::uint64_t seed);

// Teacher verdicts for the given tasks, aligned by position.
std::vector<AnswerSet> corrupt_targets(std::span<const Task> tasks,
                                       double teacher_accuracy,
                                       std::uint64_t seed);

// Largest-remainder apportionment of n into weights.size() buckets;
// remainders tie toward the lower index.
std::vector<std::int64_t> quota_counts(std::span<const double> weights,
                                       std::int64_t n);

// One JSON object per line, splits concatenated in declaration order.
// Field order: id, features, answer, dimension, hardness, split, target
// (target only on lines that have one).
std::string to_jsonl(const DatasetSplits& splits);
void save_jsonl(const std::string& path, const DatasetSplits& splits);
DatasetSplits load_jsonl(const std::string& path);

// FNV-1a over the serialized form, as fixed-width hex.
std::string dataset_fingerprint(const DatasetSplits& splits);

}  // namespace grpolab
