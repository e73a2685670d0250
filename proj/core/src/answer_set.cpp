#include "grpolab/answer_set.hpp"

#include <bit>
#include <stdexcept>

namespace grpolab {

AnswerSet AnswerSet::from_class(int cls) {
  if (cls < 0 || cls >= kClassCount) {
    throw std::invalid_argument("AnswerSet::from_class: class out of range");
  }
  return AnswerSet(cls);
}

AnswerSet AnswerSet::from_mask(unsigned mask) {
  if (mask == 0 || mask > 15) {
    throw std::invalid_argument("AnswerSet::from_mask: mask out of range");
  }
  return AnswerSet(static_cast<int>(mask) - 1);
}

std::optional<AnswerSet> AnswerSet::parse(std::string_view text) {
  if (text.empty()) return std::nullopt;
  unsigned mask = 0;
  bool has_none = false;
  for (char c : text) {
    if (c >= 'A' && c <= 'D') {
      mask |= 1u << (c - 'A');
    } else if (c == 'N') {
      has_none = true;
    } else {
      return std::nullopt;
    }
  }
  if (has_none) {
    if (mask != 0) return std::nullopt;
    return none();
  }
  return from_mask(mask);
}

int AnswerSet::size() const {
  if (is_none()) return 1;
  return std::popcount(mask());
}

bool AnswerSet::subset_of(const AnswerSet& other) const {
  if (is_none() || other.is_none()) return cls_ == other.cls_;
  return (mask() & ~other.mask()) == 0;
}

std::string AnswerSet::str() const {
  if (is_none()) return "N";
  std::string out;
  for (int i = 0; i < kOptionCount; ++i) {
    if (mask() & (1u << i)) out.push_back(static_cast<char>('A' + i));
  }
  return out;
}

}  // namespace grpolab
