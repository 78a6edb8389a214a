#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fewshot/image.hpp"
#include "fewshot/rng.hpp"

namespace fewshot {

enum class Split { kTrain, kTest };

struct Sample {
  std::string id;      // unique within the owning dataset
  Image image;         // values in [0, 1]
  int label = 0;       // class id, >= 0
  std::string source;  // dataset name
  Split split = Split::kTrain;
};

struct Dataset {
  std::string name;
  std::vector<Sample> samples;
  std::set<int> classes;
  ImageShape image_shape;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

// Imbalance levels use the convention minority n in {1, 10, 50, 100} against
// a 100-sample majority draw; other majority counts scale n proportionally.
enum class ImbalanceLevel { kHigh, kMedium, kLow, kNone };

struct ImbalanceSpec {
  ImbalanceLevel level = ImbalanceLevel::kNone;
  int majority_count = 100;
  int minority_count = 100;
};

// Minority draw size for a level at the given majority count. Requires the
// scaled count to be a whole number (e.g. High needs a multiple of 100).
int level_minority_count(ImbalanceLevel level, int majority_count);
ImbalanceSpec make_imbalance_spec(ImbalanceLevel level, int majority_count);

char level_letter(ImbalanceLevel level);
ImbalanceLevel parse_level(const std::string& token);

struct FoldDraw {
  std::vector<std::string> majority_ids;
  std::vector<std::string> minority_ids;
};

struct FoldPlan {
  std::uint64_t seed = 0;
  int fold_count = 10;
  ImbalanceSpec spec;
  std::vector<FoldDraw> draws;

  std::string to_json() const;
  static FoldPlan from_json(const std::string& text);
};

std::map<int, std::size_t> class_counts(const Dataset& dataset);

// Subset with the given split tag; keeps name/shape/classes metadata.
Dataset split_subset(const Dataset& dataset, Split split);

// Mean over classes of (largest class count / class count); >= 1, and 1 only
// for perfectly balanced counts.
double mean_ir(const std::map<int, std::size_t>& counts);

// Per-fold generator stream: folds can be drawn in any order.
Rng fold_stream(std::uint64_t seed, int fold_index);

// Uniform draw without replacement of majority_count majority and
// minority_count minority samples from a 2-class dataset.
Dataset subsample_imbalanced(const Dataset& dataset, const ImbalanceSpec& spec,
                             Rng rng);
Dataset subsample_imbalanced(const Dataset& dataset, const ImbalanceSpec& spec,
                             std::uint64_t seed);

FoldPlan make_folds(const Dataset& dataset, const ImbalanceSpec& spec,
                    int fold_count, std::uint64_t seed);

// Rebuilds the training dataset for one fold of a plan from stored ids.
Dataset materialize_fold(const Dataset& dataset, const FoldPlan& plan,
                         int fold_index);

}  // namespace fewshot
