#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fewshot/dataset.hpp"
#include "fewshot/rng.hpp"

namespace fewshot {

// Training pair: y = 0 for same-class ("positive") pairs, y = 1 for
// different-class ("negative") pairs, so the margin term of the contrastive
// loss is active exactly for different-class pairs.
struct Pair {
  std::size_t a = 0;  // index into the owning DatasetView
  std::size_t b = 0;
  int y = 0;
};

struct PairingConfig {
  int ratio_pos = 1;  // same-class share
  int ratio_neg = 1;  // different-class share
  bool balanced_sampling = false;
  std::size_t pairs_per_epoch = 0;  // 0: defaults to 2 * |dataset|

  std::string ratio_string() const {
    return std::to_string(ratio_pos) + ":" + std::to_string(ratio_neg);
  }
};

void validate(const PairingConfig& config);
PairingConfig parse_ratio(const std::string& text, PairingConfig base = {});

// Index view over a dataset. Oversampling duplicates minority *indices*, so
// duplicated draws share the underlying sample but keep distinct identities.
struct DatasetView {
  const Dataset* dataset = nullptr;
  std::vector<std::size_t> indices;

  std::size_t size() const { return indices.size(); }
  const Sample& sample(std::size_t view_index) const {
    return dataset->samples[indices[view_index]];
  }
  int label(std::size_t view_index) const { return sample(view_index).label; }
};

DatasetView identity_view(const Dataset& dataset);

// minority count / majority count, in (0, 1].
double imbalance_ratio(const Dataset& dataset);
double imbalance_ratio(const DatasetView& view);

// Duplicates minority indices cyclically (random distinct picks for the
// remainder) until both classes have equal counts.
DatasetView balance_by_oversampling(const Dataset& dataset, Rng& rng);

// All unordered pairs over the dataset with their y labels.
std::vector<Pair> enumerate_pairs(const Dataset& dataset);

// Counts implied by enumerate_pairs: sum_c C(n_c,2) same-class pairs and
// sum_{c<c'} n_c*n_c' cross-class pairs.
struct PairCounts {
  std::size_t same_class = 0;
  std::size_t cross_class = 0;
};
PairCounts count_pairs(const std::map<int, std::size_t>& counts);

// One epoch of pairs: composition same:different equals ratio_pos:ratio_neg
// exactly up to the integer remainder (assigned to the larger ratio side),
// randomly interleaved, members drawn uniformly from the view with
// replacement across the stream.
std::vector<Pair> sample_pairs(const DatasetView& view,
                               const PairingConfig& config, Rng& rng);

// Epoch composition split used by sample_pairs.
std::pair<std::size_t, std::size_t> epoch_composition(
    std::size_t pairs_per_epoch, int ratio_pos, int ratio_neg);

}  // namespace fewshot
