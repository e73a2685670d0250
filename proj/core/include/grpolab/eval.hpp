#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>

#include "grpolab/policy.hpp"
#include "grpolab/task.hpp"

namespace grpolab {

struct ScoreReport {
  double overall = 0.0;  // percent
  std::array<double, kDimensionCount> dimension_scores{};
  std::array<int, kDimensionCount> dimension_counts{};
  std::array<int, kDimensionCount> dimension_correct{};
  int total = 0;
  int correct = 0;
};

// Correct iff the response parsed and its verdict is a (non-empty, hence
// possibly partial) subset of the ground truth. N only matches N.
bool is_correct(const ParsedResponse& response, const AnswerSet& answer);

// Greedy decode -> render -> parse -> is_correct over the whole split.
// Scores are percentages; dimensions with no tasks score 0 with count 0.
// Refuses splits containing answer-withheld tasks.
ScoreReport evaluate(const PolicyParams& params, std::span<const Task> tasks);

// Expected score of a uniform guesser that emits one well-formed single
// verdict uniformly over {A, B, C, D, N}: only answers containing the
// guessed letter (or exactly N) count, so the expectation is
// 100 * mean answer size / 5 with N counting as size 1.
double random_baseline(const std::map<int, std::int64_t>& answer_size_counts);

// Same quantity by Monte Carlo, for cross-checking the closed form.
double simulate_random_guesser(std::span<const Task> tasks,
                               std::int64_t trials, std::uint64_t seed);

std::map<int, std::int64_t> answer_size_histogram(std::span<const Task> tasks);

// Ordered JSON document; baseline is included when provided.
std::string report_json(const ScoreReport& report,
                        std::optional<double> baseline);

}  // namespace grpolab
