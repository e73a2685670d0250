#include "grpolab/hcm.hpp"

#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "grpolab/eval.hpp"
#include "grpolab/response.hpp"
#include "grpolab/rng.hpp"

namespace grpolab {

CasePartition identify_cases(const PolicyParams& params,
                             std::span<const Task> tasks) {
  CasePartition out;
  out.checkpoint_tag = params.stage;
  for (const Task& t : tasks) {
    if (t.answer_withheld) {
      throw std::invalid_argument("identify_cases: withheld answers");
    }
    int cls = greedy_class(params, t.features);
    ParsedResponse parsed = parse_response(render_response(cls, ""));
    (is_correct(parsed, t.answer) ? out.easy : out.hard).push_back(t.id);
  }
  return out;
}

EpochPlan plan_with_mined_data(std::span<const Task> full,
                               std::span<const Task> mined, int warm_epochs,
                               int mined_epochs, std::uint64_t seed) {
  if (full.empty()) throw std::invalid_argument("plan: empty full split");
  if (warm_epochs < 0 || mined_epochs < 0) {
    throw std::invalid_argument("plan: negative epoch counts");
  }
  if (warm_epochs + mined_epochs < 1) {
    throw std::invalid_argument("plan: no epochs");
  }

  EpochPlan plan;
  for (int e = 0; e < warm_epochs + mined_epochs; ++e) {
    std::vector<Task> epoch;
    if (e < warm_epochs) {
      epoch.assign(full.begin(), full.end());
    } else {
      epoch.assign(mined.begin(), mined.end());
    }
    Rng rng(derive_seed(seed, {fnv1a64("epoch_order"), static_cast<std::uint64_t>(e)}));
    rng.shuffle(epoch);
    plan.epochs.push_back(std::move(epoch));
  }
  return plan;
}

EpochPlan build_epoch_plan(std::span<const Task> full,
                           std::span<const Task> augmentation, int warm_epochs,
                           int mined_epochs, std::uint64_t seed) {
  std::vector<Task> mined(full.begin(), full.end());
  mined.insert(mined.end(), augmentation.begin(), augmentation.end());
  return plan_with_mined_data(full, mined, warm_epochs, mined_epochs, seed);
}

std::string_view to_string(CompositionKind kind) {
  switch (kind) {
    case CompositionKind::hard_only: return "hard_only";
    case CompositionKind::easy_only: return "easy_only";
    case CompositionKind::full_only: return "full_only";
    case CompositionKind::full_plus_random: return "full_plus_random";
    case CompositionKind::full_plus_hard: return "full_plus_hard";
  }
  throw std::invalid_argument("bad composition kind");
}

CompositionKind composition_from_string(std::string_view s) {
  if (s == "hard_only") return CompositionKind::hard_only;
  if (s == "easy_only") return CompositionKind::easy_only;
  if (s == "full_only") return CompositionKind::full_only;
  if (s == "full_plus_random") return CompositionKind::full_plus_random;
  if (s == "full_plus_hard") return CompositionKind::full_plus_hard;
  throw std::runtime_error("unknown composition kind: " + std::string(s));
}

std::vector<Task> composition(CompositionKind kind,
                              const CasePartition& partition,
                              std::span<const Task> full, std::size_t random_k,
                              std::uint64_t seed) {
  if (full.empty()) throw std::invalid_argument("composition: empty full split");
  std::unordered_map<std::int64_t, const Task*> by_id;
  by_id.reserve(full.size());
  for (const Task& t : full) by_id[t.id] = &t;

  auto lookup = [&](std::int64_t id) -> const Task& {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw std::invalid_argument("composition: partition id not in split: " +
                                  std::to_string(id));
    }
    return *it->second;
  };

  std::vector<Task> out;
  switch (kind) {
    case CompositionKind::hard_only:
      for (std::int64_t id : partition.hard) out.push_back(lookup(id));
      break;
    case CompositionKind::easy_only:
      for (std::int64_t id : partition.easy) out.push_back(lookup(id));
      break;
    case CompositionKind::full_only:
      out.assign(full.begin(), full.end());
      break;
    case CompositionKind::full_plus_random: {
      if (random_k > full.size()) {
        throw std::invalid_argument("composition: random_k exceeds split size");
      }
      out.assign(full.begin(), full.end());
      std::vector<std::size_t> index(full.size());
      for (std::size_t i = 0; i < index.size(); ++i) index[i] = i;
      Rng rng(derive_seed(seed, {fnv1a64("random_extra")}));
      // partial Fisher-Yates: first random_k entries are a uniform sample
      for (std::size_t i = 0; i < random_k; ++i) {
        std::size_t j = i + rng.below(index.size() - i);
        std::swap(index[i], index[j]);
      }
      for (std::size_t i = 0; i < random_k; ++i) out.push_back(full[index[i]]);
      break;
    }
    case CompositionKind::full_plus_hard:
      out.assign(full.begin(), full.end());
      for (std::int64_t id : partition.hard) out.push_back(lookup(id));
      break;
  }
  // May legitimately be empty (hard_only with nothing mined); the trainer
  // rejects empty epochs downstream.
  return out;
}

std::string partition_json(const CasePartition& partition) {
  nlohmann::ordered_json j;
  j["checkpoint_tag"] = partition.checkpoint_tag;
  j["easy"] = partition.easy;
  j["hard"] = partition.hard;
  return j.dump(2) + "\n";
}

void save_partition(const std::string& path, const CasePartition& partition) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_partition: cannot open " + path);
  out << partition_json(partition);
  if (!out) throw std::runtime_error("save_partition: write failed: " + path);
}

CasePartition load_partition(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_partition: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
    CasePartition p;
    p.checkpoint_tag = j.at("checkpoint_tag").get<std::string>();
    p.easy = j.at("easy").get<std::vector<std::int64_t>>();
    p.hard = j.at("hard").get<std::vector<std::int64_t>>();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("load_partition: bad file " + path + ": " + e.what());
  }
}

}  // namespace grpolab
