#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "grpolab/answer_set.hpp"

namespace grpolab {

// Policy vocabulary: the 16 verdict classes plus one explicit malformed
// class, so "emit broken output" stays a samplable action whose probability
// the format reward can push down.
constexpr int kResponseClassCount = AnswerSet::kClassCount + 1;
constexpr int kMalformedClass = AnswerSet::kClassCount;

struct ParsedResponse {
  std::string raw;
  bool format_ok = false;
  std::optional<AnswerSet> answer;  // set iff format_ok
};

// Well-formed response text:
//   [ "<think>" free text "</think>" ] "<answer>" verdict "</answer>"
// with nothing before, between, or after the blocks. The verdict is any
// string AnswerSet::parse accepts. The malformed class renders to the bare
// think text, which never parses.
//
// Throws std::invalid_argument if think_text contains "</think>" or
// "</answer>" (either would break the round-trip guarantee), or if the
// class is out of range.
std::string render_response(int response_class, std::string_view think_text);

// Total function: never throws, anything unparseable comes back with
// format_ok == false and no answer.
ParsedResponse parse_response(std::string_view text);

}  // namespace grpolab
