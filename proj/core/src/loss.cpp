#include "fewshot/loss.hpp"

#include <cmath>

#include "fewshot/common.hpp"

namespace fewshot {

namespace {

template <typename T>
double euclidean(const std::vector<T>& a, const std::vector<T>& b) {
  if (a.size() != b.size())
    throw ConfigError("distance: embedding lengths differ (" +
                      std::to_string(a.size()) + " vs " +
                      std::to_string(b.size()) + ")");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = static_cast<double>(a[i]) - b[i];
    sum += diff * diff;
  }
  return std::sqrt(sum);
}

}  // namespace

double distance(const std::vector<float>& a, const std::vector<float>& b) {
  return euclidean(a, b);
}

double distance(const std::vector<double>& a, const std::vector<double>& b) {
  return euclidean(a, b);
}

double contrastive_loss(double d, int y, double margin) {
  if (y == 0) return d * d;
  const double shortfall = margin - d;
  return shortfall > 0.0 ? shortfall * shortfall : 0.0;
}

double weighted_contrastive_loss(double d, int y, double margin,
                                 double lambda_a, double lambda_b) {
  return (lambda_a + lambda_b) / 2.0 * contrastive_loss(d, y, margin);
}

double ClassWeights::at(int label) const {
  auto it = lambda.find(label);
  if (it == lambda.end())
    throw DataError("no class weight for label " + std::to_string(label));
  return it->second;
}

ClassWeights class_weights(const std::map<int, std::size_t>& counts) {
  if (counts.empty()) throw DataError("class_weights: no classes");
  std::size_t total = 0;
  for (const auto& [label, count] : counts) {
    if (count == 0)
      throw DataError("class_weights: class " + std::to_string(label) +
                      " is empty");
    total += count;
  }
  ClassWeights weights;
  const double classes = static_cast<double>(counts.size());
  for (const auto& [label, count] : counts)
    weights.lambda[label] =
        static_cast<double>(total) / (classes * static_cast<double>(count));
  return weights;
}

ClassWeights class_weights(const Dataset& dataset) {
  return class_weights(class_counts(dataset));
}

}  // namespace fewshot
