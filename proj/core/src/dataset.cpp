#include "grpolab/dataset.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "grpolab/rng.hpp"

namespace grpolab {

Split split_from_string(std::string_view s) {
  if (s == "training") return Split::training;
  if (s == "testing") return Split::testing;
  if (s == "pseudo_label") return Split::pseudo_label;
  if (s == "exploration") return Split::exploration;
  throw std::runtime_error("unknown split: " + std::string(s));
}

Dimension dimension_from_string(std::string_view s) {
  if (s == "appearance_deformation") return Dimension::appearance_deformation;
  if (s == "physical_shadow") return Dimension::physical_shadow;
  if (s == "placement_layout") return Dimension::placement_layout;
  if (s == "extension_rationality") return Dimension::extension_rationality;
  if (s == "normal") return Dimension::normal;
  throw std::runtime_error("unknown dimension: " + std::string(s));
}

Hardness hardness_from_string(std::string_view s) {
  if (s == "easy") return Hardness::easy;
  if (s == "hard") return Hardness::hard;
  throw std::runtime_error("unknown hardness: " + std::string(s));
}

void GenConfig::validate() const {
  if (feature_dim < 1) throw std::invalid_argument("gen: feature_dim must be >= 1");
  if (train_size < 1 || test_size < 1 || pseudo_size < 1) {
    throw std::invalid_argument("gen: train/test/pseudo sizes must be >= 1");
  }
  if (exploration_size < 0) {
    throw std::invalid_argument("gen: exploration_size must be >= 0");
  }
  double wsum = 0.0;
  for (double w : answer_length_weights) {
    if (w < 0.0) throw std::invalid_argument("gen: negative length weight");
    wsum += w;
  }
  if (!(wsum > 0.0)) throw std::invalid_argument("gen: length weights sum to 0");
  if (hard_fraction < 0.0 || hard_fraction > 1.0) {
    throw std::invalid_argument("gen: hard_fraction must be in [0, 1]");
  }
  if (!(sigma_easy >= 0.0) || !(sigma_hard >= 0.0)) {
    throw std::invalid_argument("gen: noise scales must be non-negative");
  }
  if (teacher_accuracy < 0.0 || teacher_accuracy > 1.0) {
    throw std::invalid_argument("gen: teacher_accuracy must be in [0, 1]");
  }
  for (const std::string& p : normal_patterns) {
    if (!AnswerSet::parse(p)) {
      throw std::invalid_argument("gen: unparseable normal pattern: " + p);
    }
  }
}

std::vector<std::int64_t> quota_counts(std::span<const double> weights,
                                       std::int64_t n) {
  if (weights.empty()) throw std::invalid_argument("quota: no weights");
  if (n < 0) throw std::invalid_argument("quota: negative n");
  double wsum = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw std::invalid_argument("quota: negative weight");
    wsum += w;
  }
  if (!(wsum > 0.0)) throw std::invalid_argument("quota: weights sum to 0");

  std::vector<std::int64_t> counts(weights.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    double exact = weights[i] / wsum * static_cast<double>(n);
    counts[i] = static_cast<std::int64_t>(std::floor(exact));
    assigned += counts[i];
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::int64_t r = 0; r < n - assigned; ++r) {
    counts[remainders[static_cast<std::size_t>(r)].second] += 1;
  }
  return counts;
}

namespace {

const std::vector<std::vector<unsigned>>& masks_by_size() {
  static const std::vector<std::vector<unsigned>> table = [] {
    std::vector<std::vector<unsigned>> t(5);
    for (unsigned m = 1; m <= 15; ++m) {
      t[static_cast<std::size_t>(std::popcount(m))].push_back(m);
    }
    return t;
  }();
  return table;
}

std::vector<Task> make_split(const GenConfig& cfg, Split split, std::int64_t n,
                             const std::vector<std::vector<double>>& embeddings,
                             const std::array<int, AnswerSet::kClassCount>& conf_map,
                             const std::set<std::string>& normal_set,
                             std::uint64_t seed, std::int64_t& next_id) {
  std::vector<Task> tasks;
  tasks.reserve(static_cast<std::size_t>(n));
  if (n == 0) return tasks;

  const std::uint64_t split_tag = fnv1a64(to_string(split));

  // Verdict category per task: exact quota counts, then a shuffle to
  // decorrelate category from position.
  auto counts = quota_counts(cfg.answer_length_weights, n);
  std::vector<int> category;
  category.reserve(static_cast<std::size_t>(n));
  for (std::size_t c = 0; c < counts.size(); ++c) {
    for (std::int64_t i = 0; i < counts[c]; ++i) category.push_back(static_cast<int>(c));
  }
  Rng cat_rng(derive_seed(seed, {fnv1a64("categories"), split_tag}));
  cat_rng.shuffle(category);

  // Hardness flags: exact quota as well.
  const std::array<double, 2> hard_weights = {cfg.hard_fraction,
                                              1.0 - cfg.hard_fraction};
  auto hard_counts = quota_counts(hard_weights, n);
  std::vector<char> hard_flags;
  hard_flags.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < hard_counts[0]; ++i) hard_flags.push_back(1);
  for (std::int64_t i = 0; i < hard_counts[1]; ++i) hard_flags.push_back(0);
  Rng hard_rng(derive_seed(seed, {fnv1a64("hardness"), split_tag}));
  hard_rng.shuffle(hard_flags);

  Rng verdict_rng(derive_seed(seed, {fnv1a64("verdicts"), split_tag}));
  Rng feature_rng(derive_seed(seed, {fnv1a64("features"), split_tag}));
  Rng dim_rng(derive_seed(seed, {fnv1a64("dimensions"), split_tag}));

  const int d = cfg.feature_dim;
  for (std::int64_t i = 0; i < n; ++i) {
    Task t;
    t.id = next_id++;
    t.split = split;

    int cat = category[static_cast<std::size_t>(i)];
    if (cat == 4) {
      t.answer = AnswerSet::none();
    } else {
      const auto& pool = masks_by_size()[static_cast<std::size_t>(cat) + 1];
      t.answer = AnswerSet::from_mask(pool[verdict_rng.below(pool.size())]);
    }

    t.hardness = hard_flags[static_cast<std::size_t>(i)] ? Hardness::hard
                                                         : Hardness::easy;

    const int cls = t.answer.cls();
    // Confounder target: the nearest wrong class embedding. Hard clusters
    // then sit inside genuinely contested boundary regions, so drilling them
    // trades off against the neighboring easy clusters instead of being free.
    const int conf_cls = conf_map[static_cast<std::size_t>(cls)];
    const auto& center = embeddings[static_cast<std::size_t>(cls)];
    const auto& confusion = embeddings[static_cast<std::size_t>(conf_cls)];
    t.features.resize(static_cast<std::size_t>(d));
    const bool hard = t.hardness == Hardness::hard;
    const double sigma = hard ? cfg.sigma_hard : cfg.sigma_easy;
    for (int k = 0; k < d; ++k) {
      double mean = center[static_cast<std::size_t>(k)];
      if (hard) {
        mean += cfg.confounder_shift *
                (confusion[static_cast<std::size_t>(k)] - mean);
      }
      t.features[static_cast<std::size_t>(k)] = mean + sigma * feature_rng.normal();
    }

    if (normal_set.count(t.answer.str())) {
      t.dimension = Dimension::normal;
    } else {
      t.dimension = static_cast<Dimension>(dim_rng.below(4));
    }

    t.answer_withheld = split == Split::exploration;
    tasks.push_back(std::move(t));
  }
  return tasks;
}

}  // namespace

DatasetSplits generate_dataset(const GenConfig& cfg, std::uint64_t seed) {
  cfg.validate();

  // Letter-factorized class embeddings: each option letter gets a base
  // direction, and a class mean is the normalized sum of its letters'
  // directions plus a small class-distinct offset. Classes that share
  // letters therefore crowd together: pinning down the exact option set is
  // genuinely hard at sigma_easy, while the presence of any single letter
  // stays robustly decodable. The none class has no letters of its own; it
  // sits a short step away from the all-options class, forming one boundary
  // that stays contested throughout training.
  constexpr double kLetterScale = 0.7;
  constexpr double kDistinctScale = 0.22;
  constexpr double kNoneSep = 0.35;
  Rng emb_rng(derive_seed(seed, {fnv1a64("embeddings")}));
  std::vector<std::vector<double>> letters(AnswerSet::kOptionCount);
  for (auto& v : letters) {
    v.resize(static_cast<std::size_t>(cfg.feature_dim));
    for (double& x : v) x = kLetterScale * emb_rng.normal();
  }
  std::vector<std::vector<double>> embeddings(AnswerSet::kClassCount);
  for (int c = 0; c < AnswerSet::kClassCount; ++c) {
    if (c == AnswerSet::kNoneClass) continue;
    auto& e = embeddings[static_cast<std::size_t>(c)];
    e.resize(static_cast<std::size_t>(cfg.feature_dim), 0.0);
    unsigned mask = static_cast<unsigned>(c) + 1;
    for (int l = 0; l < AnswerSet::kOptionCount; ++l) {
      if (mask & (1u << l)) {
        for (int k = 0; k < cfg.feature_dim; ++k) {
          e[static_cast<std::size_t>(k)] +=
              letters[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)];
        }
      }
    }
    double norm = std::sqrt(static_cast<double>(std::popcount(mask)));
    for (double& x : e) x /= norm;
    for (double& x : e) x += kDistinctScale * emb_rng.normal();
  }
  {
    // Class of mask 1111 (all four options) is index 14.
    const auto& quad = embeddings[14];
    auto& none = embeddings[static_cast<std::size_t>(AnswerSet::kNoneClass)];
    none = quad;
    for (double& x : none) x += kNoneSep * emb_rng.normal();
  }

  // Confounder targets: prefer the nearest wrong class that shares at least
  // one letter with the true class without containing it. Shared letters keep
  // partial credit, and thus learning signal, flowing on planted-hard tasks,
  // while non-containment means a policy drilled all the way to the exact
  // true answer is wrong for the neighboring class, so over-drilling has a
  // real cost. Classes with no such neighbor fall back to any letter-sharing
  // class, then to the nearest wrong class outright.
  auto mask_of = [](int c) -> unsigned {
    return c == AnswerSet::kNoneClass ? 0u : static_cast<unsigned>(c) + 1;
  };
  std::array<int, AnswerSet::kClassCount> conf_map{};
  for (int c = 0; c < AnswerSet::kClassCount; ++c) {
    int best[3] = {-1, -1, -1};
    double best_d2[3] = {0.0, 0.0, 0.0};
    for (int w = 0; w < AnswerSet::kClassCount; ++w) {
      if (w == c) continue;
      const unsigned overlap = mask_of(c) & mask_of(w);
      const bool contained = (mask_of(c) & ~mask_of(w)) == 0;
      const int tier = overlap != 0 ? (contained ? 1 : 0) : 2;
      double d2 = 0.0;
      for (int k = 0; k < cfg.feature_dim; ++k) {
        double diff = embeddings[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)] -
                      embeddings[static_cast<std::size_t>(w)][static_cast<std::size_t>(k)];
        d2 += diff * diff;
      }
      if (best[tier] < 0 || d2 < best_d2[tier]) {
        best[tier] = w;
        best_d2[tier] = d2;
      }
    }
    conf_map[static_cast<std::size_t>(c)] =
        best[0] >= 0 ? best[0] : (best[1] >= 0 ? best[1] : best[2]);
  }

  std::set<std::string> normal_set;
  for (const std::string& p : cfg.normal_patterns) {
    normal_set.insert(AnswerSet::parse(p)->str());
  }

  std::int64_t next_id = 0;
  DatasetSplits out;
  out.training = make_split(cfg, Split::training, cfg.train_size, embeddings,
                            conf_map, normal_set, seed, next_id);
  out.testing = make_split(cfg, Split::testing, cfg.test_size, embeddings,
                           conf_map, normal_set, seed, next_id);
  out.pseudo_label = make_split(cfg, Split::pseudo_label, cfg.pseudo_size,
                                embeddings, conf_map, normal_set, seed, next_id);
  out.exploration = make_split(cfg, Split::exploration, cfg.exploration_size,
                               embeddings, conf_map, normal_set, seed, next_id);

  for (Task& t : out.training) t.target = t.answer;
  auto teacher = corrupt_targets(out.pseudo_label, cfg.teacher_accuracy,
                                 derive_seed(seed, {fnv1a64("teacher")}));
  for (std::size_t i = 0; i < out.pseudo_label.size(); ++i) {
    out.pseudo_label[i].target = teacher[i];
  }
  return out;
}

std::vector<AnswerSet> corrupt_targets(std::span<const Task> tasks,
                                       double teacher_accuracy,
                                       std::uint64_t seed) {
  if (teacher_accuracy < 0.0 || teacher_accuracy > 1.0) {
    throw std::invalid_argument("corrupt_targets: accuracy must be in [0, 1]");
  }
  Rng rng(seed);
  std::vector<AnswerSet> out;
  out.reserve(tasks.size());
  for (const Task& t : tasks) {
    if (rng.uniform() < teacher_accuracy) {
      out.push_back(t.answer);
    } else {
      int wrong = static_cast<int>(rng.below(AnswerSet::kClassCount - 1));
      if (wrong >= t.answer.cls()) ++wrong;
      out.push_back(AnswerSet::from_class(wrong));
    }
  }
  return out;
}

namespace {

void append_split(std::string& out, const std::vector<Task>& tasks) {
  for (const Task& t : tasks) {
    nlohmann::ordered_json j;
    j["id"] = t.id;
    j["features"] = t.features;
    j["answer"] = t.answer.str();
    j["dimension"] = std::string(to_string(t.dimension));
    j["hardness"] = std::string(to_string(t.hardness));
    j["split"] = std::string(to_string(t.split));
    if (t.target) j["target"] = t.target->str();
    out += j.dump();
    out += '\n';
  }
}

}  // namespace

std::string to_jsonl(const DatasetSplits& splits) {
  std::string out;
  append_split(out, splits.training);
  append_split(out, splits.testing);
  append_split(out, splits.pseudo_label);
  append_split(out, splits.exploration);
  return out;
}

void save_jsonl(const std::string& path, const DatasetSplits& splits) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_jsonl: cannot open " + path);
  out << to_jsonl(splits);
  if (!out) throw std::runtime_error("save_jsonl: write failed: " + path);
}

DatasetSplits load_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_jsonl: cannot open " + path);
  DatasetSplits out;
  std::string line;
  std::size_t lineno = 0;
  std::set<std::int64_t> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      Task t;
      t.id = j.at("id").get<std::int64_t>();
      t.features = j.at("features").get<std::vector<double>>();
      auto answer = AnswerSet::parse(j.at("answer").get<std::string>());
      if (!answer) throw std::runtime_error("bad answer field");
      t.answer = *answer;
      t.dimension = dimension_from_string(j.at("dimension").get<std::string>());
      t.hardness = hardness_from_string(j.at("hardness").get<std::string>());
      t.split = split_from_string(j.at("split").get<std::string>());
      if (j.contains("target")) {
        auto target = AnswerSet::parse(j.at("target").get<std::string>());
        if (!target) throw std::runtime_error("bad target field");
        t.target = *target;
      }
      if (t.features.empty()) throw std::runtime_error("empty features");
      if (!seen.insert(t.id).second) throw std::runtime_error("duplicate id");
      t.answer_withheld = t.split == Split::exploration;
      switch (t.split) {
        case Split::training: out.training.push_back(std::move(t)); break;
        case Split::testing: out.testing.push_back(std::move(t)); break;
        case Split::pseudo_label: out.pseudo_label.push_back(std::move(t)); break;
        case Split::exploration: out.exploration.push_back(std::move(t)); break;
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("load_jsonl: " + path + ":" +
                               std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::string dataset_fingerprint(const DatasetSplits& splits) {
  std::uint64_t h = fnv1a64(to_jsonl(splits));
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = hex[h & 0xF];
    h >>= 4;
  }
  return out;
}

}  // namespace grpolab
