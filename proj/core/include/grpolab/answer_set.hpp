#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace grpolab {

// Verdict for one multiple-choice task: a non-empty subset of the option
// labels {A,B,C,D}, or the standalone "none acceptable" verdict N.
//
// Class indices (shared with the policy vocabulary):
//   0..14  letter subsets ordered by bitmask, A = bit 0 .. D = bit 3,
//          so class k carries mask k + 1;
//   15     N.
class AnswerSet {
 public:
  static constexpr int kClassCount = 16;
  static constexpr int kNoneClass = 15;
  static constexpr int kOptionCount = 4;

  static AnswerSet from_class(int cls);
  static AnswerSet from_mask(unsigned mask);  // mask in [1, 15]
  static AnswerSet none() { return AnswerSet(kNoneClass); }

  // Canonicalizing parse: letters in any order, duplicates allowed
  // ("CA" -> {A,C}, "NN" -> N). N mixed with letters, empty input, or any
  // character outside {A,B,C,D,N} is rejected.
  static std::optional<AnswerSet> parse(std::string_view text);

  int cls() const { return cls_; }
  bool is_none() const { return cls_ == kNoneClass; }

  // Letter bitmask; 0 for N.
  unsigned mask() const { return is_none() ? 0u : static_cast<unsigned>(cls_) + 1u; }

  // N counts as a single element.
  int size() const;

  // Set containment. N is a subset only of N; letters never relate to N.
  bool subset_of(const AnswerSet& other) const;

  // Canonical text: letters ascending ("ACD") or "N".
  std::string str() const;

  bool operator==(const AnswerSet&) const = default;

 private:
  explicit AnswerSet(int cls) : cls_(static_cast<std::uint8_t>(cls)) {}

  std::uint8_t cls_;
};

}  // namespace grpolab
