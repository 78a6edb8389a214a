#pragma once

#include <string>
#include <vector>

#include "fewshot/backbone.hpp"
#include "fewshot/dataset.hpp"

namespace fewshot {

// Embedding matrix for a dataset under fixed weights, one row per sample.
struct NeuralCodes {
  int dim = 0;
  std::vector<float> data;  // rows * dim, row-major
  std::vector<int> labels;
  std::string source_params_version;

  std::size_t rows() const { return labels.size(); }
  const float* row(std::size_t i) const {
    return data.data() + i * static_cast<std::size_t>(dim);
  }
  bool empty() const { return labels.empty(); }
};

NeuralCodes embed_dataset(const Parameters& params, const Dataset& dataset);

double squared_distance(const float* a, const float* b, int dim);

// Label of the training row nearest to the query (the paper's "Histogram"
// rule); ties break toward the lowest row index.
int histogram_predict(const NeuralCodes& nc, const std::vector<float>& query);

// Majority label among the k nearest rows; vote ties break toward the class
// of the nearest member of the tied classes.
int knn_predict(const NeuralCodes& nc, const std::vector<float>& query, int k);

}  // namespace fewshot
