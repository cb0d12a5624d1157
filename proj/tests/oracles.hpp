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

// Independent reference implementations used to cross-check the library.

#ifndef REJEX_TESTS_ORACLES_HPP_
#define REJEX_TESTS_ORACLES_HPP_

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "rejex/classifiers.hpp"
#include "rejex/tree.hpp"

namespace rejex::oracle {

// Unsorted linear scan.
inline double p_value_count(std::span<const double> scores, double alpha) {
  std::size_t count = 0;
  for (double s : scores) {
    if (s >= alpha) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(scores.size() + 1);
}

inline double nonconformity_naive(std::span<const double> probs, int label) {
  double best_other = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (static_cast<int>(i) != label) best_other = std::max(best_other, probs[i]);
  }
  return best_other - probs[static_cast<std::size_t>(label)];
}

// Random tree over d features with thresholds at k * step + step / 2, so no
// grid point of spacing `step` ever sits on a boundary.
inline DecisionTree random_grid_tree(std::mt19937_64& rng, std::size_t d, int max_depth, int class_count,
                                     double step, double span_half) {
  std::vector<TreeNode> nodes;
  std::uniform_int_distribution<int> pick_feature(0, static_cast<int>(d) - 1);
  const int half_cells = static_cast<int>(std::lround(span_half / step));
  std::uniform_int_distribution<int> pick_cell(-half_cells, half_cells - 1);
  std::uniform_int_distribution<int> pick_class(0, class_count - 1);
  std::bernoulli_distribution stop(0.25);

  auto grow = [&](auto&& self, int depth) -> int {
    const int index = static_cast<int>(nodes.size());
    nodes.emplace_back();
    std::vector<double> counts(static_cast<std::size_t>(class_count), 0.0);
    if (depth == max_depth || (depth > 0 && stop(rng))) {
      counts[static_cast<std::size_t>(pick_class(rng))] = 1.0;
      nodes[static_cast<std::size_t>(index)].class_counts = counts;
      return index;
    }
    const int feature = pick_feature(rng);
    const double threshold = pick_cell(rng) * step + step / 2.0;
    const int left = self(self, depth + 1);
    const int right = self(self, depth + 1);
    for (int child : {left, right}) {
      const auto& cc = nodes[static_cast<std::size_t>(child)].class_counts;
      for (std::size_t k = 0; k < counts.size(); ++k) counts[k] += cc[k];
    }
    auto& node = nodes[static_cast<std::size_t>(index)];
    node.feature = feature;
    node.threshold = threshold;
    node.left = left;
    node.right = right;
    node.class_counts = counts;
    return index;
  };
  grow(grow, 0);
  return DecisionTree::from_nodes(std::move(nodes), d, class_count);
}

struct GridHit {
  std::vector<double> point;
  double distance = 0.0;
};

// Closest point of the lattice x + step * Z^d that the tree assigns to
// `target`. The tree is constant between consecutive thresholds of each
// feature, so along every axis only x_j itself and the lattice points
// bordering each threshold can be optimal; enumerating their product is
// exhaustive over the lattice. Requires every threshold to sit off-lattice.
inline std::optional<GridHit> brute_force_counterfactual(const DecisionTree& tree, std::span<const double> x,
                                                         int target, double step) {
  const std::size_t d = x.size();
  std::vector<std::vector<double>> axis(d);
  for (std::size_t j = 0; j < d; ++j) axis[j].push_back(x[j]);
  for (const auto& node : tree.nodes()) {
    if (node.is_leaf()) continue;
    const auto j = static_cast<std::size_t>(node.feature);
    const double k = std::floor((node.threshold - x[j]) / step);
    axis[j].push_back(x[j] + k * step);
    axis[j].push_back(x[j] + (k + 1.0) * step);
  }
  std::optional<GridHit> best;
  std::vector<double> p(d);
  auto visit = [&](auto&& self, std::size_t j, double dist) -> void {
    if (best && dist > best->distance + 1e-12) return;
    if (j == d) {
      if (tree.predict(p) == target && (!best || dist < best->distance - 1e-12)) best = GridHit{p, dist};
      return;
    }
    for (double v : axis[j]) {
      p[j] = v;
      self(self, j + 1, dist + std::abs(v - x[j]));
    }
  };
  visit(visit, 0, 0.0);
  return best;
}

// Classifier with a fixed probability function; used to hand-build reject
// options with closed-form credibility.
class FunctionClassifier final : public ProbabilisticClassifier {
 public:
  using Fn = std::function<ProbVector(std::span<const double>)>;
  FunctionClassifier(Fn fn, std::size_t d, int c) : fn_(std::move(fn)), d_(d), c_(c) {}
  ProbVector predict_proba(std::span<const double> x) const override { return fn_(x); }
  std::size_t feature_count() const override { return d_; }
  int class_count() const override { return c_; }

 private:
  Fn fn_;
  std::size_t d_;
  int c_;
};

}  // namespace rejex::oracle

#endif  // REJEX_TESTS_ORACLES_HPP_
