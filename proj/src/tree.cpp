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

#include "rejex/tree.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "rejex/random.hpp"

namespace rejex {

namespace {

constexpr double kMinDecrease = 1e-12;

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double child_impurity = 0.0;  // weighted by child sizes, divided by parent size
};

class Builder {
 public:
  Builder(const Matrix& x, std::span<const int> y, int class_count, const TreeParams& params,
          std::uint64_t seed)
      : x_(x), y_(y), class_count_(class_count), params_(params), rng_(seed) {
    all_features_.resize(x.cols());
    std::iota(all_features_.begin(), all_features_.end(), 0);
  }

  std::vector<TreeNode> build(std::vector<std::size_t> rows) {
    grow(std::move(rows), 0);
    return std::move(nodes_);
  }

 private:
  std::vector<double> histogram(const std::vector<std::size_t>& rows) const {
    std::vector<double> counts(static_cast<std::size_t>(class_count_), 0.0);
    for (std::size_t r : rows) counts[static_cast<std::size_t>(y_[r])] += 1.0;
    return counts;
  }

  std::vector<int> candidate_features() {
    const int d = static_cast<int>(all_features_.size());
    if (params_.max_features <= 0 || params_.max_features >= d) return all_features_;
    std::vector<int> pool = all_features_;
    // Partial Fisher-Yates; the drawn subset is then scanned in index order.
    for (int i = 0; i < params_.max_features; ++i) {
      std::uniform_int_distribution<int> pick(i, d - 1);
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng_))]);
    }
    pool.resize(static_cast<std::size_t>(params_.max_features));
    std::sort(pool.begin(), pool.end());
    return pool;
  }

  Split best_split(const std::vector<std::size_t>& rows, const std::vector<double>& counts) {
    const double n = static_cast<double>(rows.size());
    const double parent = gini(counts);
    const std::size_t min_leaf = static_cast<std::size_t>(std::max(1, params_.min_samples_leaf));
    Split best;
    best.child_impurity = parent;

    std::vector<double> left(counts.size());
    std::vector<double> right(counts.size());
    for (int f : candidate_features()) {
      sorted_.clear();
      for (std::size_t r : rows) sorted_.emplace_back(x_(r, static_cast<std::size_t>(f)), y_[r]);
      std::sort(sorted_.begin(), sorted_.end());
      if (sorted_.front().first == sorted_.back().first) continue;

      std::fill(left.begin(), left.end(), 0.0);
      right = counts;
      double left_sq = 0.0;
      double right_sq = 0.0;
      for (double c : right) right_sq += c * c;
      for (std::size_t i = 1; i < sorted_.size(); ++i) {
        const auto label = static_cast<std::size_t>(sorted_[i - 1].second);
        left_sq += 2.0 * left[label] + 1.0;
        right_sq -= 2.0 * right[label] - 1.0;
        left[label] += 1.0;
        right[label] -= 1.0;
        const double lo = sorted_[i - 1].first;
        const double hi = sorted_[i].first;
        if (!(lo < hi)) continue;
        if (i < min_leaf || sorted_.size() - i < min_leaf) continue;
        const double nl = static_cast<double>(i);
        const double nr = n - nl;
        const double gl = 1.0 - left_sq / (nl * nl);
        const double gr = 1.0 - right_sq / (nr * nr);
        const double weighted = (nl * gl + nr * gr) / n;
        if (weighted < best.child_impurity - kMinDecrease) {
          double mid = lo + (hi - lo) / 2.0;
          if (!(mid < hi)) mid = lo;
          best.feature = f;
          best.threshold = mid;
          best.child_impurity = weighted;
        }
      }
    }
    return best;
  }

  int grow(std::vector<std::size_t> rows, int depth) {
    const int index = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    nodes_.back().class_counts = histogram(rows);
    const std::vector<double>& counts = nodes_.back().class_counts;

    const std::size_t min_leaf = static_cast<std::size_t>(std::max(1, params_.min_samples_leaf));
    const bool pure = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; }) <= 1;
    const bool depth_reached = params_.max_depth > 0 && depth >= params_.max_depth;
    if (pure || depth_reached || rows.size() < 2 * min_leaf) return index;

    const Split split = best_split(rows, nodes_[static_cast<std::size_t>(index)].class_counts);
    if (split.feature < 0) return index;

    std::vector<std::size_t> left_rows;
    std::vector<std::size_t> right_rows;
    for (std::size_t r : rows) {
      (x_(r, static_cast<std::size_t>(split.feature)) <= split.threshold ? left_rows : right_rows)
          .push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    nodes_[static_cast<std::size_t>(index)].feature = split.feature;
    nodes_[static_cast<std::size_t>(index)].threshold = split.threshold;
    const int l = grow(std::move(left_rows), depth + 1);
    nodes_[static_cast<std::size_t>(index)].left = l;
    const int r = grow(std::move(right_rows), depth + 1);
    nodes_[static_cast<std::size_t>(index)].right = r;
    return index;
  }

  const Matrix& x_;
  std::span<const int> y_;
  int class_count_;
  TreeParams params_;
  Rng rng_;
  std::vector<int> all_features_;
  std::vector<std::pair<double, int>> sorted_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

double gini(std::span<const double> class_counts) {
  double total = 0.0;
  double sq = 0.0;
  for (double c : class_counts) {
    total += c;
    sq += c * c;
  }
  return total > 0.0 ? 1.0 - sq / (total * total) : 0.0;
}

double TreeNode::sample_count() const {
  return std::accumulate(class_counts.begin(), class_counts.end(), 0.0);
}

int TreeNode::majority_class() const {
  return static_cast<int>(std::max_element(class_counts.begin(), class_counts.end()) -
                          class_counts.begin());
}

DecisionTree DecisionTree::fit(const Matrix& x, std::span<const int> y, int class_count,
                               std::span<const std::size_t> rows, const TreeParams& params,
                               std::uint64_t seed) {
  if (rows.empty()) throw std::invalid_argument("cannot fit a tree on zero samples");
  if (y.size() != x.rows()) throw std::invalid_argument("label count does not match rows");
  if (class_count < 1) throw std::invalid_argument("class_count must be positive");
  if (params.min_samples_leaf < 1) throw std::invalid_argument("min_samples_leaf must be >= 1");
  if (params.max_depth < 0) throw std::invalid_argument("max_depth must be >= 0");
  for (std::size_t r : rows) {
    if (y[r] < 0 || y[r] >= class_count) throw std::invalid_argument("label out of range");
  }
  Builder builder(x, y, class_count, params, seed);
  DecisionTree tree;
  tree.nodes_ = builder.build(std::vector<std::size_t>(rows.begin(), rows.end()));
  tree.feature_count_ = x.cols();
  tree.class_count_ = class_count;
  return tree;
}

DecisionTree DecisionTree::fit(const Matrix& x, std::span<const int> y, int class_count,
                               const TreeParams& params, std::uint64_t seed) {
  std::vector<std::size_t> rows(x.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return fit(x, y, class_count, rows, params, seed);
}

DecisionTree DecisionTree::from_nodes(std::vector<TreeNode> nodes, std::size_t feature_count,
                                      int class_count) {
  if (nodes.empty()) throw std::invalid_argument("tree needs at least one node");
  const int n = static_cast<int>(nodes.size());
  std::vector<int> parents(nodes.size(), 0);
  for (int i = 0; i < n; ++i) {
    const TreeNode& node = nodes[static_cast<std::size_t>(i)];
    if (node.class_counts.size() != static_cast<std::size_t>(class_count)) {
      throw std::invalid_argument("node histogram width does not match class count");
    }
    if (node.is_leaf()) continue;
    if (static_cast<std::size_t>(node.feature) >= feature_count) {
      throw std::invalid_argument("node splits on a feature out of range");
    }
    for (int child : {node.left, node.right}) {
      if (child <= i || child >= n) throw std::invalid_argument("invalid child link");
      ++parents[static_cast<std::size_t>(child)];
    }
  }
  for (int i = 1; i < n; ++i) {
    if (parents[static_cast<std::size_t>(i)] != 1) {
      throw std::invalid_argument("every non-root node needs exactly one parent");
    }
  }
  DecisionTree tree;
  tree.nodes_ = std::move(nodes);
  tree.feature_count_ = feature_count;
  tree.class_count_ = class_count;
  return tree;
}

int DecisionTree::leaf_index(std::span<const double> x) const {
  if (x.size() != feature_count_) throw std::invalid_argument("dimension mismatch");
  int i = 0;
  while (!nodes_[static_cast<std::size_t>(i)].is_leaf()) {
    const TreeNode& node = nodes_[static_cast<std::size_t>(i)];
    i = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  return i;
}

ProbVector DecisionTree::predict_proba(std::span<const double> x) const {
  const TreeNode& leaf = nodes_[static_cast<std::size_t>(leaf_index(x))];
  ProbVector p = leaf.class_counts;
  const double total = leaf.sample_count();
  if (total > 0.0) {
    for (double& v : p) v /= total;
  } else {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(p.size()));
  }
  return p;
}

int DecisionTree::predict(std::span<const double> x) const {
  return nodes_[static_cast<std::size_t>(leaf_index(x))].majority_class();
}

int DecisionTree::depth() const {
  std::vector<int> depth_of(nodes_.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, depth_of[i]);
    if (!nodes_[i].is_leaf()) {
      depth_of[static_cast<std::size_t>(nodes_[i].left)] = depth_of[i] + 1;
      depth_of[static_cast<std::size_t>(nodes_[i].right)] = depth_of[i] + 1;
    }
  }
  return deepest;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

}  // namespace rejex
