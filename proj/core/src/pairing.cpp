#include "fewshot/pairing.hpp"

#include <algorithm>

#include "fewshot/common.hpp"

namespace fewshot {

void validate(const PairingConfig& config) {
  if (config.ratio_pos <= 0 || config.ratio_neg <= 0)
    throw ConfigError("pairing ratio sides must be positive, got " +
                      config.ratio_string());
  if (config.pairs_per_epoch != 0 &&
      config.pairs_per_epoch < static_cast<std::size_t>(config.ratio_pos +
                                                        config.ratio_neg))
    throw ConfigError("pairs_per_epoch must be at least ratio_pos + ratio_neg");
}

PairingConfig parse_ratio(const std::string& text, PairingConfig base) {
  const std::size_t colon = text.find(':');
  if (colon == std::string::npos)
    throw ConfigError("pairing ratio must look like 'P:N', got '" + text + "'");
  try {
    base.ratio_pos = std::stoi(text.substr(0, colon));
    base.ratio_neg = std::stoi(text.substr(colon + 1));
  } catch (...) {
    throw ConfigError("pairing ratio must look like 'P:N', got '" + text + "'");
  }
  validate(base);
  return base;
}

DatasetView identity_view(const Dataset& dataset) {
  DatasetView view;
  view.dataset = &dataset;
  view.indices.resize(dataset.samples.size());
  for (std::size_t i = 0; i < view.indices.size(); ++i) view.indices[i] = i;
  return view;
}

namespace {

double ratio_from_counts(const std::map<int, std::size_t>& counts,
                         const std::string& name) {
  if (counts.size() != 2)
    throw DataError("imbalance_ratio: expected exactly 2 classes in '" + name +
                    "'");
  auto it = counts.begin();
  const std::size_t a = it->second;
  const std::size_t b = std::next(it)->second;
  if (a == 0 || b == 0)
    throw DataError("imbalance_ratio: empty class in '" + name + "'");
  return static_cast<double>(std::min(a, b)) /
         static_cast<double>(std::max(a, b));
}

}  // namespace

double imbalance_ratio(const Dataset& dataset) {
  return ratio_from_counts(class_counts(dataset), dataset.name);
}

double imbalance_ratio(const DatasetView& view) {
  std::map<int, std::size_t> counts;
  for (std::size_t i = 0; i < view.size(); ++i) ++counts[view.label(i)];
  return ratio_from_counts(counts, view.dataset ? view.dataset->name : "view");
}

DatasetView balance_by_oversampling(const Dataset& dataset, Rng& rng) {
  const auto counts = class_counts(dataset);
  if (counts.size() != 2)
    throw DataError("balance_by_oversampling: expected exactly 2 classes");

  auto it = counts.begin();
  const auto [label_a, count_a] = *it;
  const auto [label_b, count_b] = *std::next(it);
  if (count_a == 0 || count_b == 0)
    throw DataError("balance_by_oversampling: empty class");

  DatasetView view = identity_view(dataset);
  if (count_a == count_b) return view;

  const int minority_label = count_a < count_b ? label_a : label_b;
  const std::size_t minority = std::min(count_a, count_b);
  const std::size_t majority = std::max(count_a, count_b);

  std::vector<std::size_t> minority_indices;
  for (std::size_t i = 0; i < dataset.samples.size(); ++i)
    if (dataset.samples[i].label == minority_label) minority_indices.push_back(i);

  // Full cycles beyond the original copy, then a random distinct remainder.
  const std::size_t cycles = majority / minority;
  const std::size_t remainder = majority % minority;
  for (std::size_t cycle = 1; cycle < cycles; ++cycle)
    view.indices.insert(view.indices.end(), minority_indices.begin(),
                        minority_indices.end());
  if (remainder > 0) {
    for (std::size_t pos : rng.sample_without_replacement(minority, remainder))
      view.indices.push_back(minority_indices[pos]);
  }
  return view;
}

std::vector<Pair> enumerate_pairs(const Dataset& dataset) {
  if (dataset.samples.size() < 2)
    throw DataError("enumerate_pairs: need at least 2 samples");
  std::vector<Pair> pairs;
  pairs.reserve(dataset.samples.size() * (dataset.samples.size() - 1) / 2);
  for (std::size_t i = 0; i < dataset.samples.size(); ++i)
    for (std::size_t j = i + 1; j < dataset.samples.size(); ++j)
      pairs.push_back(
          {i, j, dataset.samples[i].label == dataset.samples[j].label ? 0 : 1});
  return pairs;
}

PairCounts count_pairs(const std::map<int, std::size_t>& counts) {
  PairCounts out;
  std::size_t total = 0;
  for (const auto& [label, n] : counts) {
    out.same_class += n * (n - 1) / 2;
    total += n;
  }
  out.cross_class = total * (total - 1) / 2 - out.same_class;
  return out;
}

std::pair<std::size_t, std::size_t> epoch_composition(
    std::size_t pairs_per_epoch, int ratio_pos, int ratio_neg) {
  const std::size_t denom = static_cast<std::size_t>(ratio_pos + ratio_neg);
  std::size_t n_pos = pairs_per_epoch * ratio_pos / denom;
  std::size_t n_neg = pairs_per_epoch * ratio_neg / denom;
  const std::size_t remainder = pairs_per_epoch - n_pos - n_neg;
  if (ratio_neg > ratio_pos)
    n_neg += remainder;
  else
    n_pos += remainder;
  return {n_pos, n_neg};
}

std::vector<Pair> sample_pairs(const DatasetView& view,
                               const PairingConfig& config, Rng& rng) {
  validate(config);
  const std::size_t total = config.pairs_per_epoch == 0
                                ? 2 * view.size()
                                : config.pairs_per_epoch;
  const auto [n_pos, n_neg] =
      epoch_composition(total, config.ratio_pos, config.ratio_neg);

  // Per-class member slots within the view.
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < view.size(); ++i)
    members[view.label(i)].push_back(i);

  std::vector<std::size_t> same_eligible;  // slots in classes with >= 2 members
  for (const auto& [label, slots] : members)
    if (slots.size() >= 2)
      same_eligible.insert(same_eligible.end(), slots.begin(), slots.end());

  if (n_pos > 0 && same_eligible.empty())
    throw ConfigError(
        "same-class pairs requested but no class has 2 or more members");
  if (n_neg > 0 && members.size() < 2)
    throw ConfigError(
        "different-class pairs requested but only one class is present");

  std::vector<int> kinds;
  kinds.reserve(total);
  kinds.insert(kinds.end(), n_pos, 0);
  kinds.insert(kinds.end(), n_neg, 1);
  rng.shuffle(kinds);

  std::vector<Pair> pairs;
  pairs.reserve(total);
  for (int kind : kinds) {
    Pair pair;
    pair.y = kind;
    if (kind == 0) {
      const std::size_t a = same_eligible[rng.index(same_eligible.size())];
      const auto& slots = members[view.label(a)];
      const std::size_t a_pos =
          std::lower_bound(slots.begin(), slots.end(), a) - slots.begin();
      std::size_t j = rng.index(slots.size() - 1);
      if (j >= a_pos) ++j;
      pair.a = a;
      pair.b = slots[j];
    } else {
      const std::size_t a = rng.index(view.size());
      const int label_a = view.label(a);
      std::size_t others = view.size() - members[label_a].size();
      std::size_t r = rng.index(others);
      std::size_t b = 0;
      for (const auto& [label, slots] : members) {
        if (label == label_a) continue;
        if (r < slots.size()) {
          b = slots[r];
          break;
        }
        r -= slots.size();
      }
      pair.a = a;
      pair.b = b;
    }
    pairs.push_back(pair);
  }
  return pairs;
}

}  // namespace fewshot
