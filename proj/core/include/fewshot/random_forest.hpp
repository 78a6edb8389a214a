#pragma once

#include <cstdint>
#include <vector>

#include "fewshot/neural_codes.hpp"
#include "fewshot/rng.hpp"

namespace fewshot {

// Bagged CART forest: Gini splits over sqrt(N) feature subsamples, trees
// grown to purity, majority vote. Deterministic under seed.
class RandomForest {
 public:
  static RandomForest fit(const NeuralCodes& nc, int trees,
                          std::uint64_t seed);

  int predict(const std::vector<float>& query) const;

  // Per-class vote counts aligned with classes(); sums to the tree count.
  std::vector<int> vote_counts(const std::vector<float>& query) const;

  const std::vector<int>& classes() const { return classes_; }
  int tree_count() const { return static_cast<int>(trees_.size()); }

 private:
  struct Node {
    int feature = -1;     // -1 marks a leaf
    float threshold = 0;  // goes left when value <= threshold
    int left = -1;
    int right = -1;
    int label_index = -1;  // leaf prediction, index into classes_
  };
  using Tree = std::vector<Node>;

  int tree_predict(const Tree& tree, const float* query) const;

  int dim_ = 0;
  std::vector<int> classes_;
  std::vector<Tree> trees_;
};

}  // namespace fewshot
