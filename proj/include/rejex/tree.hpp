// Copyright 2026 The rejex Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef REJEX_TREE_HPP_
#define REJEX_TREE_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rejex/matrix.hpp"

namespace rejex {

using ProbVector = std::vector<double>;

/// Gini impurity 1 - sum_k p_k^2 of a class histogram.
double gini(std::span<const double> class_counts);

struct TreeNode {
  int feature = -1;        // -1 marks a leaf
  double threshold = 0.0;  // samples with x[feature] <= threshold go left
  int left = -1;
  int right = -1;
  std::vector<double> class_counts;

  bool is_leaf() const { return feature < 0; }
  double sample_count() const;
  int majority_class() const;  // ties go to the lower class id
};

struct TreeParams {
  int max_depth = 0;  // 0 means unbounded
  int min_samples_leaf = 1;
  int max_features = 0;  // features examined per split; 0 means all
};

/// Binary CART classification tree with Gini splits.
///
/// Split candidates are midpoints between consecutive distinct feature
/// values. A candidate replaces the incumbent only if it lowers the weighted
/// child impurity by more than 1e-12, so ties resolve to the lower feature
/// index and then the lower threshold. Nodes are stored in pre-order (left
/// subtree first); node 0 is the root.
class DecisionTree {
 public:
  DecisionTree() = default;

  static DecisionTree fit(const Matrix& x, std::span<const int> y, int class_count,
                          std::span<const std::size_t> rows, const TreeParams& params,
                          std::uint64_t seed);
  static DecisionTree fit(const Matrix& x, std::span<const int> y, int class_count,
                          const TreeParams& params, std::uint64_t seed = 0);

  /// Builds a tree from explicit nodes (deserialization, hand-built test
  /// trees). Validates child links, features and histogram widths.
  static DecisionTree from_nodes(std::vector<TreeNode> nodes, std::size_t feature_count,
                                 int class_count);

  int leaf_index(std::span<const double> x) const;
  ProbVector predict_proba(std::span<const double> x) const;
  int predict(std::span<const double> x) const;

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t feature_count() const { return feature_count_; }
  int class_count() const { return class_count_; }
  int depth() const;
  std::size_t leaf_count() const;

 private:
  std::vector<TreeNode> nodes_;
  std::size_t feature_count_ = 0;
  int class_count_ = 0;
};

}  // namespace rejex

#endif  // REJEX_TREE_HPP_
