#include "grpolab/response.hpp"

#include <stdexcept>

namespace grpolab {

namespace {
constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";
}  // namespace

std::string render_response(int response_class, std::string_view think_text) {
  if (response_class < 0 || response_class >= kResponseClassCount) {
    throw std::invalid_argument("render_response: class out of range");
  }
  if (think_text.find(kThinkClose) != std::string_view::npos ||
      think_text.find(kAnswerClose) != std::string_view::npos) {
    throw std::invalid_argument(
        "render_response: think text contains a closing tag");
  }
  if (response_class == kMalformedClass) return std::string(think_text);

  std::string out;
  out.reserve(think_text.size() + 32);
  out += kThinkOpen;
  out += think_text;
  out += kThinkClose;
  out += kAnswerOpen;
  out += AnswerSet::from_class(response_class).str();
  out += kAnswerClose;
  return out;
}

ParsedResponse parse_response(std::string_view text) {
  ParsedResponse out;
  out.raw = std::string(text);

  std::string_view rest = text;
  if (rest.starts_with(kThinkOpen)) {
    auto close = rest.find(kThinkClose);
    if (close == std::string_view::npos) return out;
    rest.remove_prefix(close + kThinkClose.size());
  }
  if (!rest.starts_with(kAnswerOpen)) return out;
  rest.remove_prefix(kAnswerOpen.size());
  if (!rest.ends_with(kAnswerClose)) return out;
  rest.remove_suffix(kAnswerClose.size());

  auto verdict = AnswerSet::parse(rest);
  if (!verdict) return out;
  out.format_ok = true;
  out.answer = *verdict;
  return out;
}

}  // namespace grpolab
