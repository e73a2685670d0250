#include "grpolab/eval.hpp"

#include <stdexcept>

#include <json.hpp>

#include "grpolab/response.hpp"
#include "grpolab/rng.hpp"

namespace grpolab {

bool is_correct(const ParsedResponse& response, const AnswerSet& answer) {
  if (!response.format_ok || !response.answer) return false;
  return response.answer->subset_of(answer);
}

ScoreReport evaluate(const PolicyParams& params, std::span<const Task> tasks) {
  if (tasks.empty()) throw std::invalid_argument("evaluate: empty split");
  ScoreReport report;
  for (const Task& t : tasks) {
    if (t.answer_withheld) {
      throw std::invalid_argument("evaluate: split contains withheld answers");
    }
    int cls = greedy_class(params, t.features);
    ParsedResponse parsed = parse_response(render_response(cls, ""));
    bool ok = is_correct(parsed, t.answer);
    int dim = static_cast<int>(t.dimension);
    report.dimension_counts[dim] += 1;
    report.total += 1;
    if (ok) {
      report.dimension_correct[dim] += 1;
      report.correct += 1;
    }
  }
  report.overall = 100.0 * report.correct / report.total;
  for (int d = 0; d < kDimensionCount; ++d) {
    if (report.dimension_counts[d] > 0) {
      report.dimension_scores[d] =
          100.0 * report.dimension_correct[d] / report.dimension_counts[d];
    }
  }
  return report;
}

std::map<int, std::int64_t> answer_size_histogram(std::span<const Task> tasks) {
  std::map<int, std::int64_t> hist;
  for (const Task& t : tasks) {
    if (t.answer_withheld) {
      throw std::invalid_argument("answer_size_histogram: withheld answers");
    }
    hist[t.answer.size()] += 1;
  }
  return hist;
}

double random_baseline(const std::map<int, std::int64_t>& answer_size_counts) {
  std::int64_t total = 0;
  std::int64_t size_sum = 0;
  for (const auto& [size, count] : answer_size_counts) {
    if (size < 1 || size > AnswerSet::kOptionCount) {
      throw std::invalid_argument("random_baseline: impossible answer size");
    }
    if (count < 0) throw std::invalid_argument("random_baseline: negative count");
    total += count;
    size_sum += static_cast<std::int64_t>(size) * count;
  }
  if (total == 0) throw std::invalid_argument("random_baseline: empty histogram");
  double mean_size = static_cast<double>(size_sum) / static_cast<double>(total);
  return 100.0 * mean_size / 5.0;
}

double simulate_random_guesser(std::span<const Task> tasks,
                               std::int64_t trials, std::uint64_t seed) {
  if (tasks.empty()) throw std::invalid_argument("simulate: empty split");
  if (trials < 1) throw std::invalid_argument("simulate: trials must be >= 1");
  Rng rng(seed);
  double score_sum = 0.0;
  for (std::int64_t t = 0; t < trials; ++t) {
    std::int64_t correct = 0;
    for (const Task& task : tasks) {
      if (task.answer_withheld) {
        throw std::invalid_argument("simulate: withheld answers");
      }
      std::uint64_t g = rng.below(5);
      ParsedResponse guess;
      guess.format_ok = true;
      guess.answer = g < 4 ? AnswerSet::from_mask(1u << g) : AnswerSet::none();
      if (is_correct(guess, task.answer)) ++correct;
    }
    score_sum += 100.0 * static_cast<double>(correct) /
                 static_cast<double>(tasks.size());
  }
  return score_sum / static_cast<double>(trials);
}

std::string report_json(const ScoreReport& report,
                        std::optional<double> baseline) {
  nlohmann::ordered_json j;
  j["overall_score"] = report.overall;
  nlohmann::ordered_json scores, counts, correct;
  for (int d = 0; d < kDimensionCount; ++d) {
    auto name = std::string(to_string(static_cast<Dimension>(d)));
    scores[name] = report.dimension_scores[d];
    counts[name] = report.dimension_counts[d];
    correct[name] = report.dimension_correct[d];
  }
  j["dimension_scores"] = scores;
  j["dimension_counts"] = counts;
  j["dimension_correct"] = correct;
  j["total"] = report.total;
  j["correct"] = report.correct;
  if (baseline) j["random_baseline"] = *baseline;
  return j.dump(2) + "\n";
}

}  // namespace grpolab
