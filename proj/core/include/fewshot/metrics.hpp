#pragma once

#include <map>
#include <set>
#include <vector>

namespace fewshot {

struct ClassCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
};

// One-vs-rest confusion counts per class.
struct ConfusionCounts {
  std::map<int, ClassCounts> per_class;
  std::size_t total = 0;
};

ConfusionCounts confusion(const std::vector<int>& predictions,
                          const std::vector<int>& truth,
                          const std::set<int>& classes);

// 2TP / (2TP + FP + FN); 0 when the denominator is 0.
double f1(const ClassCounts& counts);

// Unweighted mean of per-class F1.
double macro_f1(const ConfusionCounts& counts);

struct FoldResults {
  std::vector<double> per_fold;
  double mean = 0.0;
  double std_dev = 0.0;  // population
};

FoldResults aggregate(const std::vector<double>& fold_scores);

}  // namespace fewshot
