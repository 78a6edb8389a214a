#include "fewshot/dataset.hpp"

#include <algorithm>
#include <unordered_map>

#include <json.hpp>

#include "fewshot/common.hpp"

namespace fewshot {

namespace {

// Indices of majority and minority class samples; majority is the class with
// more samples, ties broken toward the lower class id.
struct ClassIndex {
  int majority_label = 0;
  int minority_label = 0;
  std::vector<std::size_t> majority;
  std::vector<std::size_t> minority;
};

ClassIndex index_two_classes(const Dataset& dataset) {
  if (dataset.classes.size() != 2)
    throw DataError("expected exactly 2 classes, found " +
                    std::to_string(dataset.classes.size()) + " in dataset '" +
                    dataset.name + "'");
  auto it = dataset.classes.begin();
  const int a = *it++;
  const int b = *it;
  std::vector<std::size_t> ia, ib;
  for (std::size_t i = 0; i < dataset.samples.size(); ++i)
    (dataset.samples[i].label == a ? ia : ib).push_back(i);
  ClassIndex out;
  if (ib.size() > ia.size()) {
    out.majority_label = b;
    out.minority_label = a;
    out.majority = std::move(ib);
    out.minority = std::move(ia);
  } else {
    out.majority_label = a;
    out.minority_label = b;
    out.majority = std::move(ia);
    out.minority = std::move(ib);
  }
  return out;
}

std::vector<std::size_t> draw_without_replacement(
    const std::vector<std::size_t>& pool, std::size_t count, Rng& rng,
    const char* class_name) {
  if (pool.size() < count)
    throw DataError(std::string("insufficient ") + class_name +
                    " samples: need " + std::to_string(count) + ", have " +
                    std::to_string(pool.size()) + " (shortfall " +
                    std::to_string(count - pool.size()) + ")");
  std::vector<std::size_t> positions =
      rng.sample_without_replacement(pool.size(), count);
  std::vector<std::size_t> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = pool[positions[i]];
  return out;
}

}  // namespace

int level_minority_count(ImbalanceLevel level, int majority_count) {
  int n = 0;
  switch (level) {
    case ImbalanceLevel::kHigh: n = 1; break;
    case ImbalanceLevel::kMedium: n = 10; break;
    case ImbalanceLevel::kLow: n = 50; break;
    case ImbalanceLevel::kNone: n = 100; break;
  }
  const long long scaled = static_cast<long long>(majority_count) * n;
  if (majority_count <= 0 || scaled % 100 != 0)
    throw ConfigError("majority count " + std::to_string(majority_count) +
                      " does not scale level " +
                      std::string(1, level_letter(level)) +
                      " to a whole minority count");
  return static_cast<int>(scaled / 100);
}

ImbalanceSpec make_imbalance_spec(ImbalanceLevel level, int majority_count) {
  return {level, majority_count, level_minority_count(level, majority_count)};
}

char level_letter(ImbalanceLevel level) {
  switch (level) {
    case ImbalanceLevel::kHigh: return 'H';
    case ImbalanceLevel::kMedium: return 'M';
    case ImbalanceLevel::kLow: return 'L';
    case ImbalanceLevel::kNone: return 'N';
  }
  return '?';
}

ImbalanceLevel parse_level(const std::string& token) {
  if (token == "H" || token == "high") return ImbalanceLevel::kHigh;
  if (token == "M" || token == "medium") return ImbalanceLevel::kMedium;
  if (token == "L" || token == "low") return ImbalanceLevel::kLow;
  if (token == "N" || token == "none") return ImbalanceLevel::kNone;
  throw ConfigError("unknown imbalance level '" + token +
                    "', expected one of {H,M,L,N}");
}

std::map<int, std::size_t> class_counts(const Dataset& dataset) {
  std::map<int, std::size_t> counts;
  for (const Sample& s : dataset.samples) ++counts[s.label];
  return counts;
}

Dataset split_subset(const Dataset& dataset, Split split) {
  Dataset out;
  out.name = dataset.name;
  out.classes = dataset.classes;
  out.image_shape = dataset.image_shape;
  for (const Sample& s : dataset.samples)
    if (s.split == split) out.samples.push_back(s);
  return out;
}

double mean_ir(const std::map<int, std::size_t>& counts) {
  if (counts.empty()) throw DataError("mean_ir: no classes");
  std::size_t max_count = 0;
  for (const auto& [label, count] : counts) {
    if (count == 0)
      throw DataError("mean_ir: class " + std::to_string(label) +
                      " has zero count");
    max_count = std::max(max_count, count);
  }
  double sum = 0.0;
  for (const auto& [label, count] : counts)
    sum += static_cast<double>(max_count) / static_cast<double>(count);
  return sum / static_cast<double>(counts.size());
}

Rng fold_stream(std::uint64_t seed, int fold_index) {
  return Rng(seed).derive(static_cast<std::uint64_t>(fold_index));
}

Dataset subsample_imbalanced(const Dataset& dataset, const ImbalanceSpec& spec,
                             Rng rng) {
  if (spec.majority_count <= 0 || spec.minority_count <= 0 ||
      spec.minority_count > spec.majority_count)
    throw ConfigError("invalid imbalance spec: majority " +
                      std::to_string(spec.majority_count) + ", minority " +
                      std::to_string(spec.minority_count));
  const ClassIndex idx = index_two_classes(dataset);
  const auto majority = draw_without_replacement(
      idx.majority, static_cast<std::size_t>(spec.majority_count), rng,
      "majority-class");
  const auto minority = draw_without_replacement(
      idx.minority, static_cast<std::size_t>(spec.minority_count), rng,
      "minority-class");

  Dataset out;
  out.name = dataset.name;
  out.classes = dataset.classes;
  out.image_shape = dataset.image_shape;
  out.samples.reserve(majority.size() + minority.size());
  for (std::size_t i : majority) out.samples.push_back(dataset.samples[i]);
  for (std::size_t i : minority) out.samples.push_back(dataset.samples[i]);
  return out;
}

Dataset subsample_imbalanced(const Dataset& dataset, const ImbalanceSpec& spec,
                             std::uint64_t seed) {
  return subsample_imbalanced(dataset, spec, Rng(seed));
}

FoldPlan make_folds(const Dataset& dataset, const ImbalanceSpec& spec,
                    int fold_count, std::uint64_t seed) {
  if (fold_count <= 0) throw ConfigError("fold_count must be positive");
  const ClassIndex idx = index_two_classes(dataset);
  FoldPlan plan;
  plan.seed = seed;
  plan.fold_count = fold_count;
  plan.spec = spec;
  plan.draws.reserve(fold_count);
  for (int fold = 0; fold < fold_count; ++fold) {
    Rng rng = fold_stream(seed, fold);
    FoldDraw draw;
    for (std::size_t i : draw_without_replacement(
             idx.majority, static_cast<std::size_t>(spec.majority_count), rng,
             "majority-class"))
      draw.majority_ids.push_back(dataset.samples[i].id);
    for (std::size_t i : draw_without_replacement(
             idx.minority, static_cast<std::size_t>(spec.minority_count), rng,
             "minority-class"))
      draw.minority_ids.push_back(dataset.samples[i].id);
    plan.draws.push_back(std::move(draw));
  }
  return plan;
}

Dataset materialize_fold(const Dataset& dataset, const FoldPlan& plan,
                         int fold_index) {
  if (fold_index < 0 || fold_index >= static_cast<int>(plan.draws.size()))
    throw ConfigError("fold index out of range: " + std::to_string(fold_index));
  std::unordered_map<std::string, std::size_t> by_id;
  by_id.reserve(dataset.samples.size());
  for (std::size_t i = 0; i < dataset.samples.size(); ++i)
    by_id.emplace(dataset.samples[i].id, i);

  Dataset out;
  out.name = dataset.name;
  out.classes = dataset.classes;
  out.image_shape = dataset.image_shape;
  const FoldDraw& draw = plan.draws[fold_index];
  auto push = [&](const std::string& id) {
    auto it = by_id.find(id);
    if (it == by_id.end())
      throw DataError("fold plan references unknown sample id '" + id + "'");
    out.samples.push_back(dataset.samples[it->second]);
  };
  for (const std::string& id : draw.majority_ids) push(id);
  for (const std::string& id : draw.minority_ids) push(id);
  return out;
}

std::string FoldPlan::to_json() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["fold_count"] = fold_count;
  j["spec"] = {{"level", std::string(1, level_letter(spec.level))},
               {"majority_count", spec.majority_count},
               {"minority_count", spec.minority_count}};
  j["draws"] = nlohmann::json::array();
  for (const FoldDraw& d : draws)
    j["draws"].push_back(
        {{"majority", d.majority_ids}, {"minority", d.minority_ids}});
  return j.dump(2);
}

FoldPlan FoldPlan::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  FoldPlan plan;
  plan.seed = j.at("seed").get<std::uint64_t>();
  plan.fold_count = j.at("fold_count").get<int>();
  const auto& s = j.at("spec");
  plan.spec.level = parse_level(s.at("level").get<std::string>());
  plan.spec.majority_count = s.at("majority_count").get<int>();
  plan.spec.minority_count = s.at("minority_count").get<int>();
  for (const auto& d : j.at("draws")) {
    FoldDraw draw;
    draw.majority_ids = d.at("majority").get<std::vector<std::string>>();
    draw.minority_ids = d.at("minority").get<std::vector<std::string>>();
    plan.draws.push_back(std::move(draw));
  }
  return plan;
}

}  // namespace fewshot
