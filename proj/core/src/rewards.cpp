#include "grpolab/rewards.hpp"

namespace grpolab {

double format_reward(const ParsedResponse& response) {
  return response.format_ok ? 1.0 : 0.0;
}

double binary_accuracy_reward(const ParsedResponse& response,
                              const AnswerSet& answer) {
  if (!response.format_ok || !response.answer) return 0.0;
  return *response.answer == answer ? 1.0 : 0.0;
}

double dpa_reward(const ParsedResponse& response, const AnswerSet& answer) {
  if (!response.format_ok || !response.answer) return 0.0;
  if (!response.answer->subset_of(answer)) return 0.0;
  return static_cast<double>(response.answer->size()) /
         static_cast<double>(answer.size());
}

RewardBreakdown total_reward(const ParsedResponse& response,
                             const AnswerSet& answer, AccuracyMode mode) {
  RewardBreakdown out;
  out.format = format_reward(response);
  if (out.format > 0.0) {
    out.accuracy = mode == AccuracyMode::binary
                       ? binary_accuracy_reward(response, answer)
                       : dpa_reward(response, answer);
  }
  out.total = out.format + out.accuracy;
  return out;
}

}  // namespace grpolab
