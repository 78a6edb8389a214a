#include "fewshot/metrics.hpp"

#include <cmath>

#include "fewshot/common.hpp"

namespace fewshot {

ConfusionCounts confusion(const std::vector<int>& predictions,
                          const std::vector<int>& truth,
                          const std::set<int>& classes) {
  if (predictions.size() != truth.size())
    throw DataError("confusion: prediction/truth length mismatch (" +
                    std::to_string(predictions.size()) + " vs " +
                    std::to_string(truth.size()) + ")");
  ConfusionCounts counts;
  counts.total = truth.size();
  for (int c : classes) counts.per_class[c] = {};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!classes.count(truth[i]))
      throw DataError("confusion: truth label " + std::to_string(truth[i]) +
                      " outside class set");
    if (!classes.count(predictions[i]))
      throw DataError("confusion: predicted label " +
                      std::to_string(predictions[i]) + " outside class set");
    for (int c : classes) {
      ClassCounts& cc = counts.per_class[c];
      const bool is_truth = truth[i] == c;
      const bool is_pred = predictions[i] == c;
      if (is_truth && is_pred)
        ++cc.tp;
      else if (!is_truth && is_pred)
        ++cc.fp;
      else if (is_truth && !is_pred)
        ++cc.fn;
      else
        ++cc.tn;
    }
  }
  return counts;
}

double f1(const ClassCounts& counts) {
  const double denom =
      2.0 * static_cast<double>(counts.tp) + counts.fp + counts.fn;
  if (denom == 0.0) return 0.0;
  return 2.0 * static_cast<double>(counts.tp) / denom;
}

double macro_f1(const ConfusionCounts& counts) {
  if (counts.per_class.empty()) throw DataError("macro_f1: no classes");
  double sum = 0.0;
  for (const auto& [label, cc] : counts.per_class) sum += f1(cc);
  return sum / static_cast<double>(counts.per_class.size());
}

FoldResults aggregate(const std::vector<double>& fold_scores) {
  if (fold_scores.empty()) throw DataError("aggregate: no fold scores");
  FoldResults results;
  results.per_fold = fold_scores;
  double sum = 0.0;
  for (double v : fold_scores) sum += v;
  results.mean = sum / static_cast<double>(fold_scores.size());
  double var = 0.0;
  for (double v : fold_scores) {
    const double d = v - results.mean;
    var += d * d;
  }
  results.std_dev = std::sqrt(var / static_cast<double>(fold_scores.size()));
  return results;
}

}  // namespace fewshot
