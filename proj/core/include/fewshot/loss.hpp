#pragma once

#include <cmath>
#include <map>
#include <vector>

#include "fewshot/dataset.hpp"

namespace fewshot {

// Euclidean distance between two embeddings.
double distance(const std::vector<float>& a, const std::vector<float>& b);
double distance(const std::vector<double>& a, const std::vector<double>& b);

// Contrastive loss for one pair: (1-y) * D^2 + y * max(0, m - D)^2.
double contrastive_loss(double d, int y, double margin);

// Inverse class-frequency weights: lambda_c = |T| / (|C| * count_c).
// Identity: sum_c lambda_c * count_c = |T|.
struct ClassWeights {
  std::map<int, double> lambda;

  double at(int label) const;
  double pair_weight(int label_a, int label_b) const {
    return (at(label_a) + at(label_b)) / 2.0;
  }
};

ClassWeights class_weights(const std::map<int, std::size_t>& counts);
ClassWeights class_weights(const Dataset& dataset);

// Contrastive loss scaled by the mean of the members' class weights.
double weighted_contrastive_loss(double d, int y, double margin,
                                 double lambda_a, double lambda_b);

// Loss and d(loss)/d(embedding) for one pair; weight = 1 gives the plain
// loss. The y = 0 branch is computed as 2*w*(e_a - e_b), which is exact and
// smooth even at D = 0; the hinge branch guards the D -> 0 singularity.
template <typename T>
double pair_loss_backward(const std::vector<T>& e_a, const std::vector<T>& e_b,
                          int y, double margin, double weight,
                          std::vector<T>& d_ea, std::vector<T>& d_eb) {
  const std::size_t n = e_a.size();
  d_ea.assign(n, T(0));
  d_eb.assign(n, T(0));
  double d2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double diff = static_cast<double>(e_a[i]) - e_b[i];
    d2 += diff * diff;
  }
  const double d = std::sqrt(d2);
  if (y == 0) {
    for (std::size_t i = 0; i < n; ++i) {
      const double g = 2.0 * weight * (static_cast<double>(e_a[i]) - e_b[i]);
      d_ea[i] = static_cast<T>(g);
      d_eb[i] = static_cast<T>(-g);
    }
    return weight * d2;
  }
  const double shortfall = margin - d;
  if (shortfall <= 0.0) return 0.0;
  if (d > 1e-12) {
    const double scale = -2.0 * weight * shortfall / d;
    for (std::size_t i = 0; i < n; ++i) {
      const double g = scale * (static_cast<double>(e_a[i]) - e_b[i]);
      d_ea[i] = static_cast<T>(g);
      d_eb[i] = static_cast<T>(-g);
    }
  }
  return weight * shortfall * shortfall;
}

}  // namespace fewshot
