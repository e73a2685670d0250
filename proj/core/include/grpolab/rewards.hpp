#pragma once

#include "grpolab/answer_set.hpp"
#include "grpolab/response.hpp"

namespace grpolab {

enum class AccuracyMode { binary, dpa };

struct RewardBreakdown {
  double format = 0.0;
  double accuracy = 0.0;
  double total = 0.0;
};

// 1 iff the response text parsed under the strict grammar.
double format_reward(const ParsedResponse& response);

// 1 iff the parsed verdict equals the ground truth exactly.
double binary_accuracy_reward(const ParsedResponse& response,
                              const AnswerSet& answer);

// Partial credit |response| / |answer| when the parsed verdict is a subset
// of the ground truth, 0 otherwise. N counts as size 1 and is a subset only
// of N, so the full range is (0, 1] on subsets and 0 elsewhere.
double dpa_reward(const ParsedResponse& response, const AnswerSet& answer);

// format + accuracy, with accuracy forced to 0 whenever the format check
// fails (a malformed response earns nothing even if something letter-like
// could be scraped out of it).
RewardBreakdown total_reward(const ParsedResponse& response,
                             const AnswerSet& answer, AccuracyMode mode);

}  // namespace grpolab
