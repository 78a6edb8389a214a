#include "fewshot/neural_codes.hpp"

#include <algorithm>
#include <map>

#include "fewshot/common.hpp"

namespace fewshot {

NeuralCodes embed_dataset(const Parameters& params, const Dataset& dataset) {
  NeuralCodes nc;
  nc.dim = params.config.embedding_dim;
  nc.source_params_version = params.version;
  nc.data.reserve(dataset.samples.size() * static_cast<std::size_t>(nc.dim));
  nc.labels.reserve(dataset.samples.size());

  Network<float> network(params.config);
  Network<float>::Trace trace;
  for (const Sample& sample : dataset.samples) {
    if (sample.image.shape() != params.config.input_shape)
      throw DataError("sample '" + sample.id +
                      "' does not match backbone input shape");
    const std::vector<float>& e =
        network.forward(params, sample.image.pixels.data(), trace);
    nc.data.insert(nc.data.end(), e.begin(), e.end());
    nc.labels.push_back(sample.label);
  }
  return nc;
}

double squared_distance(const float* a, const float* b, int dim) {
  double sum = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double diff = static_cast<double>(a[i]) - b[i];
    sum += diff * diff;
  }
  return sum;
}

int histogram_predict(const NeuralCodes& nc, const std::vector<float>& query) {
  if (nc.empty()) throw DataError("histogram_predict: no neural codes");
  if (static_cast<int>(query.size()) != nc.dim)
    throw DataError("histogram_predict: query dimension mismatch");
  std::size_t best = 0;
  double best_d = squared_distance(nc.row(0), query.data(), nc.dim);
  for (std::size_t i = 1; i < nc.rows(); ++i) {
    const double d = squared_distance(nc.row(i), query.data(), nc.dim);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return nc.labels[best];
}

int knn_predict(const NeuralCodes& nc, const std::vector<float>& query, int k) {
  if (nc.empty()) throw DataError("knn_predict: no neural codes");
  if (k < 1 || static_cast<std::size_t>(k) > nc.rows())
    throw ConfigError("knn_predict: k = " + std::to_string(k) +
                      " out of range [1, " + std::to_string(nc.rows()) + "]");
  if (static_cast<int>(query.size()) != nc.dim)
    throw DataError("knn_predict: query dimension mismatch");

  std::vector<std::pair<double, std::size_t>> dist(nc.rows());
  for (std::size_t i = 0; i < nc.rows(); ++i)
    dist[i] = {squared_distance(nc.row(i), query.data(), nc.dim), i};
  // Stable ordering: distance, then row index.
  std::partial_sort(dist.begin(), dist.begin() + k, dist.end());

  std::map<int, int> votes;
  for (int i = 0; i < k; ++i) ++votes[nc.labels[dist[i].second]];
  int top_votes = 0;
  for (const auto& [label, count] : votes) top_votes = std::max(top_votes, count);

  // Tie rule: among tied classes, the class of the single nearest neighbor.
  for (int i = 0; i < k; ++i) {
    const int label = nc.labels[dist[i].second];
    if (votes[label] == top_votes) return label;
  }
  return nc.labels[dist[0].second];
}

}  // namespace fewshot
