#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "grpolab/answer_set.hpp"

namespace grpolab {

enum class Split { training, testing, pseudo_label, exploration };

enum class Dimension {
  appearance_deformation,
  physical_shadow,
  placement_layout,
  extension_rationality,
  normal,
};
constexpr int kDimensionCount = 5;

enum class Hardness { easy, hard };

constexpr std::string_view to_string(Split s) {
  switch (s) {
    case Split::training: return "training";
    case Split::testing: return "testing";
    case Split::pseudo_label: return "pseudo_label";
    case Split::exploration: return "exploration";
  }
  throw std::invalid_argument("bad split");
}

constexpr std::string_view to_string(Dimension d) {
  switch (d) {
    case Dimension::appearance_deformation: return "appearance_deformation";
    case Dimension::physical_shadow: return "physical_shadow";
    case Dimension::placement_layout: return "placement_layout";
    case Dimension::extension_rationality: return "extension_rationality";
    case Dimension::normal: return "normal";
  }
  throw std::invalid_argument("bad dimension");
}

constexpr std::string_view to_string(Hardness h) {
  switch (h) {
    case Hardness::easy: return "easy";
    case Hardness::hard: return "hard";
  }
  throw std::invalid_argument("bad hardness");
}

Split split_from_string(std::string_view s);
Dimension dimension_from_string(std::string_view s);
Hardness hardness_from_string(std::string_view s);

// One synthetic quality-inspection item. `answer` is the ground-truth
// verdict; `target` is a supervision verdict and is only present on splits
// that carry one (clean on training, teacher-corrupted on pseudo_label).
// On the exploration split the answer exists but is withheld from consumers:
// training and evaluation refuse such tasks.
struct Task {
  std::int64_t id = 0;
  std::vector<double> features;
  AnswerSet answer = AnswerSet::none();
  Dimension dimension = Dimension::normal;
  Hardness hardness = Hardness::easy;
  Split split = Split::training;
  bool answer_withheld = false;
  std::optional<AnswerSet> target;
};

struct DatasetSplits {
  std::vector<Task> training;
  std::vector<Task> testing;
  std::vector<Task> pseudo_label;
  std::vector<Task> exploration;
};

}  // namespace grpolab
