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

#include "rejex/counterfactual.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace rejex {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void collect(const DecisionTree& tree, int node, LeafBox& box, int target_class, bool any_class,
             std::vector<LeafBox>& out) {
  const TreeNode& n = tree.nodes()[static_cast<std::size_t>(node)];
  if (n.is_leaf()) {
    const int cls = n.majority_class();
    if (any_class || cls == target_class) {
      out.push_back(box);
      out.back().predicted_class = cls;
      out.back().leaf_node = node;
    }
    return;
  }
  const auto j = static_cast<std::size_t>(n.feature);
  const double saved_hi = box.hi[j];
  box.hi[j] = std::min(box.hi[j], n.threshold);
  collect(tree, n.left, box, target_class, any_class, out);
  box.hi[j] = saved_hi;

  const double saved_lo = box.lo[j];
  box.lo[j] = std::max(box.lo[j], n.threshold);
  collect(tree, n.right, box, target_class, any_class, out);
  box.lo[j] = saved_lo;
}

std::vector<LeafBox> regions(const DecisionTree& tree, int target_class, bool any_class) {
  std::vector<LeafBox> out;
  if (tree.nodes().empty()) return out;
  LeafBox box;
  box.lo.assign(tree.feature_count(), -kInf);
  box.hi.assign(tree.feature_count(), kInf);
  collect(tree, 0, box, target_class, any_class, out);
  // Paths that intersect to an empty interval (possible in hand-built trees)
  // describe unreachable leaves.
  std::erase_if(out, [](const LeafBox& b) {
    for (std::size_t j = 0; j < b.lo.size(); ++j) {
      if (!(b.lo[j] < b.hi[j])) return true;
    }
    return false;
  });
  return out;
}

}  // namespace

bool LeafBox::contains(std::span<const double> x) const {
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!(x[j] > lo[j] && x[j] <= hi[j])) return false;
  }
  return true;
}

void CfConfig::validate() const {
  if (!(delta > 0.0)) throw std::invalid_argument("counterfactual margin must be positive");
  if (!(tolerance < delta)) throw std::invalid_argument("change tolerance must be below the margin");
}

std::vector<LeafBox> leaf_regions(const DecisionTree& tree, int target_class) {
  return regions(tree, target_class, false);
}

std::vector<LeafBox> all_leaf_regions(const DecisionTree& tree) { return regions(tree, 0, true); }

std::vector<double> nearest_point_in_box(const LeafBox& box, std::span<const double> x,
                                         double delta) {
  std::vector<double> p(x.begin(), x.end());
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j] > box.hi[j]) {
      p[j] = box.hi[j];
    } else if (!(p[j] > box.lo[j])) {
      // Boxes narrower than delta get their midpoint instead.
      p[j] = box.lo[j] + delta <= box.hi[j] ? box.lo[j] + delta : box.lo[j] + (box.hi[j] - box.lo[j]) / 2.0;
    }
  }
  return p;
}

Counterfactual closest_counterfactual(const DecisionTree& tree, std::span<const double> x_orig,
                                      int target_class, const CfConfig& cfg) {
  cfg.validate();
  if (x_orig.size() != tree.feature_count()) throw std::invalid_argument("dimension mismatch");
  if (tree.predict(x_orig) == target_class) {
    return {std::vector<double>(x_orig.begin(), x_orig.end()), 0.0, tree.leaf_index(x_orig)};
  }
  const std::vector<LeafBox> boxes = leaf_regions(tree, target_class);
  if (boxes.empty()) throw std::domain_error("target class unreachable");

  Counterfactual best;
  best.distance = kInf;
  int best_changes = std::numeric_limits<int>::max();
  for (const LeafBox& box : boxes) {
    std::vector<double> p = nearest_point_in_box(box, x_orig, cfg.delta);
    double dist = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) dist += std::abs(p[j] - x_orig[j]);
    const int changes = sparsity(p, x_orig, cfg.tolerance);
    const bool better = dist < best.distance - 1e-12 ||
                        (std::abs(dist - best.distance) <= 1e-12 && changes < best_changes);
    if (better) {
      best.point = std::move(p);
      best.distance = dist;
      best.leaf_node = box.leaf_node;
      best_changes = changes;
    }
  }
  if (tree.predict(best.point) != target_class) {
    throw std::logic_error("counterfactual left its target leaf");
  }
  return best;
}

int sparsity(std::span<const double> a, std::span<const double> b, double tolerance) {
  if (a.size() != b.size()) throw std::invalid_argument("dimension mismatch");
  int count = 0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (std::abs(a[j] - b[j]) > tolerance) ++count;
  }
  return count;
}

std::vector<FeatureDelta> counterfactual_deltas(std::span<const double> x_orig,
                                                std::span<const double> x_cf,
                                                const std::vector<std::string>& names,
                                                const ScalerParams& scaler, double tolerance) {
  if (x_orig.size() != x_cf.size()) throw std::invalid_argument("dimension mismatch");
  const bool scaled = scaler.dim() == x_orig.size();
  const std::vector<double> raw_orig = scaled ? scaler.inverse(x_orig) : std::vector<double>(x_orig.begin(), x_orig.end());
  const std::vector<double> raw_cf = scaled ? scaler.inverse(x_cf) : std::vector<double>(x_cf.begin(), x_cf.end());
  std::vector<FeatureDelta> out;
  for (std::size_t j = 0; j < x_orig.size(); ++j) {
    if (!(std::abs(x_cf[j] - x_orig[j]) > tolerance)) continue;
    FeatureDelta d;
    d.feature = j;
    d.name = j < names.size() ? names[j] : "f" + std::to_string(j);
    d.original = x_orig[j];
    d.updated = x_cf[j];
    d.original_raw = raw_orig[j];
    d.updated_raw = raw_cf[j];
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace rejex
