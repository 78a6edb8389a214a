#include "fewshot/random_forest.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "fewshot/common.hpp"

namespace fewshot {

namespace {

double gini(const std::vector<int>& counts, int total) {
  if (total == 0) return 0.0;
  double sum = 0.0;
  for (int c : counts) {
    const double p = static_cast<double>(c) / total;
    sum += p * p;
  }
  return 1.0 - sum;
}

}  // namespace

RandomForest RandomForest::fit(const NeuralCodes& nc, int trees,
                               std::uint64_t seed) {
  if (trees < 10 || trees > 500)
    throw ConfigError("forest size must lie in [10, 500], got " +
                      std::to_string(trees));
  if (nc.empty()) throw DataError("rf_fit: empty training set");

  RandomForest forest;
  forest.dim_ = nc.dim;
  std::set<int> classes(nc.labels.begin(), nc.labels.end());
  forest.classes_.assign(classes.begin(), classes.end());
  const int n_classes = static_cast<int>(forest.classes_.size());

  std::vector<int> label_index(nc.rows());
  for (std::size_t i = 0; i < nc.rows(); ++i)
    label_index[i] = static_cast<int>(
        std::lower_bound(forest.classes_.begin(), forest.classes_.end(),
                         nc.labels[i]) -
        forest.classes_.begin());

  const int features_per_split = std::max(
      1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(nc.dim)))));

  Rng root(seed);
  forest.trees_.reserve(trees);
  for (int t = 0; t < trees; ++t) {
    Rng rng = root.derive(static_cast<std::uint64_t>(t));

    // Bootstrap sample of row indices.
    std::vector<std::size_t> rows(nc.rows());
    for (auto& r : rows) r = rng.index(nc.rows());

    Tree tree;
    std::vector<int> all_features(nc.dim);
    for (int f = 0; f < nc.dim; ++f) all_features[f] = f;

    // Iterative depth-first growth; each stack entry owns its row subset.
    struct Item {
      std::vector<std::size_t> rows;
      int node;
    };
    tree.push_back(Node{});
    std::vector<Item> stack;
    stack.push_back({std::move(rows), 0});

    while (!stack.empty()) {
      Item item = std::move(stack.back());
      stack.pop_back();

      std::vector<int> counts(n_classes, 0);
      for (std::size_t r : item.rows) ++counts[label_index[r]];
      const int total = static_cast<int>(item.rows.size());
      int majority = 0;
      for (int c = 1; c < n_classes; ++c)
        if (counts[c] > counts[majority]) majority = c;

      const bool pure =
          counts[majority] == total || total <= 1;

      int best_feature = -1;
      float best_threshold = 0.0f;
      double best_gain = 1e-12;
      if (!pure) {
        const double parent = gini(counts, total);
        // Feature subsample without replacement.
        rng.shuffle(all_features);
        std::vector<std::pair<float, int>> column(total);
        for (int fi = 0; fi < features_per_split; ++fi) {
          const int feature = all_features[fi];
          for (int r = 0; r < total; ++r)
            column[r] = {nc.row(item.rows[r])[feature],
                         label_index[item.rows[r]]};
          std::sort(column.begin(), column.end());

          std::vector<int> left(n_classes, 0);
          std::vector<int> right(counts);
          for (int r = 0; r + 1 < total; ++r) {
            ++left[column[r].second];
            --right[column[r].second];
            if (column[r].first == column[r + 1].first) continue;
            const int nl = r + 1;
            const int nr = total - nl;
            const double gain =
                parent - (nl * gini(left, nl) + nr * gini(right, nr)) / total;
            if (gain > best_gain) {
              best_gain = gain;
              best_feature = feature;
              best_threshold =
                  column[r].first +
                  (column[r + 1].first - column[r].first) / 2.0f;
            }
          }
        }
      }

      if (best_feature < 0) {
        tree[item.node].feature = -1;
        tree[item.node].label_index = majority;
        continue;
      }

      std::vector<std::size_t> left_rows, right_rows;
      for (std::size_t r : item.rows) {
        if (nc.row(r)[best_feature] <= best_threshold)
          left_rows.push_back(r);
        else
          right_rows.push_back(r);
      }
      if (left_rows.empty() || right_rows.empty()) {
        tree[item.node].feature = -1;
        tree[item.node].label_index = majority;
        continue;
      }

      tree[item.node].feature = best_feature;
      tree[item.node].threshold = best_threshold;
      tree[item.node].left = static_cast<int>(tree.size());
      tree.push_back(Node{});
      tree[item.node].right = static_cast<int>(tree.size());
      tree.push_back(Node{});
      stack.push_back({std::move(right_rows), tree[item.node].right});
      stack.push_back({std::move(left_rows), tree[item.node].left});
    }
    forest.trees_.push_back(std::move(tree));
  }
  return forest;
}

int RandomForest::tree_predict(const Tree& tree, const float* query) const {
  int node = 0;
  while (tree[node].feature >= 0)
    node = query[tree[node].feature] <= tree[node].threshold
               ? tree[node].left
               : tree[node].right;
  return tree[node].label_index;
}

std::vector<int> RandomForest::vote_counts(
    const std::vector<float>& query) const {
  if (static_cast<int>(query.size()) != dim_)
    throw DataError("rf_predict: query dimension mismatch");
  std::vector<int> votes(classes_.size(), 0);
  for (const Tree& tree : trees_) ++votes[tree_predict(tree, query.data())];
  return votes;
}

int RandomForest::predict(const std::vector<float>& query) const {
  const std::vector<int> votes = vote_counts(query);
  std::size_t best = 0;
  for (std::size_t c = 1; c < votes.size(); ++c)
    if (votes[c] > votes[best]) best = c;
  return classes_[best];
}

}  // namespace fewshot
