#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "grpolab/policy.hpp"
#include "grpolab/task.hpp"

namespace grpolab {

// Which training tasks a checkpoint already solves (easy) or still misses
// (hard), by task id, in encounter order.
struct CasePartition {
  std::string checkpoint_tag;
  std::vector<std::int64_t> easy;
  std::vector<std::int64_t> hard;
};

// Greedy-decodes every task and partitions by the evaluation correctness
// rule. Refuses withheld answers.
CasePartition identify_cases(const PolicyParams& params,
                             std::span<const Task> tasks);

struct EpochPlan {
  std::vector<std::vector<Task>> epochs;
};

// Curriculum for RL: `warm_epochs` epochs of the full split, then
// `mined_epochs` epochs of the given mined multiset, each epoch shuffled
// deterministically in the seed. The mined multiset is used verbatim; if
// it is empty the plan carries empty epochs and the trainer rejects it.
EpochPlan plan_with_mined_data(std::span<const Task> full,
                               std::span<const Task> mined, int warm_epochs,
                               int mined_epochs, std::uint64_t seed);

// Convenience wrapper matching the common recipe: mined epochs replay the
// full split plus an oversampled augmentation multiset.
EpochPlan build_epoch_plan(std::span<const Task> full,
                           std::span<const Task> augmentation, int warm_epochs,
                           int mined_epochs, std::uint64_t seed);

// Mined-epoch data recipes. Counts refer to the partition: hard_only trains
// on the missed tasks alone, full_plus_hard replays everything and repeats
// the missed tasks, full_plus_random repeats a uniform sample of random_k
// training tasks instead (the control for "it's just more data").
enum class CompositionKind {
  hard_only,
  easy_only,
  full_only,
  full_plus_random,
  full_plus_hard,
};

std::string_view to_string(CompositionKind kind);
CompositionKind composition_from_string(std::string_view s);

// The complete mined-epoch multiset for a recipe. `full` must contain every
// id the partition references.
std::vector<Task> composition(CompositionKind kind,
                              const CasePartition& partition,
                              std::span<const Task> full, std::size_t random_k,
                              std::uint64_t seed);

// Partition files are JSON: checkpoint_tag, easy, hard.
std::string partition_json(const CasePartition& partition);
void save_partition(const std::string& path, const CasePartition& partition);
CasePartition load_partition(const std::string& path);

}  // namespace grpolab
