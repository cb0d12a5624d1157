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

#ifndef REJEX_COUNTERFACTUAL_HPP_
#define REJEX_COUNTERFACTUAL_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rejex/data.hpp"
#include "rejex/tree.hpp"

namespace rejex {

/// Axis-aligned region of one tree leaf. Along every dimension the region is
/// (lo, hi]: lower bounds come from right branches (x > t, open) and upper
/// bounds from left branches (x <= t, closed). Unconstrained sides are
/// +-infinity.
struct LeafBox {
  std::vector<double> lo;
  std::vector<double> hi;
  int predicted_class = 0;
  int leaf_node = -1;

  bool contains(std::span<const double> x) const;
};

struct CfConfig {
  double delta = 1e-4;      // step taken past an open bound
  double tolerance = 1e-9;  // |change| above this counts towards sparsity
  void validate() const;
};

struct Counterfactual {
  std::vector<double> point;
  double distance = 0.0;  // L1 from the query
  int leaf_node = -1;
};

/// Boxes of every leaf predicting target_class, in depth-first (left-first)
/// leaf order.
std::vector<LeafBox> leaf_regions(const DecisionTree& tree, int target_class);

/// All leaf boxes regardless of class; together they partition R^d.
std::vector<LeafBox> all_leaf_regions(const DecisionTree& tree);

/// Nearest point of the box to x under any Lp norm: each coordinate is
/// clamped into its interval, landing exactly on a closed bound or `delta`
/// inside an open one.
std::vector<double> nearest_point_in_box(const LeafBox& box, std::span<const double> x,
                                         double delta);

/// Exact minimum-L1 point at which the tree predicts target_class. Ties are
/// broken by fewer changed coordinates, then by leaf order. Throws
/// std::domain_error("target class unreachable") if no leaf predicts it.
Counterfactual closest_counterfactual(const DecisionTree& tree, std::span<const double> x_orig,
                                      int target_class, const CfConfig& cfg = {});

/// Number of coordinates with |a_j - b_j| > tolerance.
int sparsity(std::span<const double> a, std::span<const double> b, double tolerance = 1e-9);

struct FeatureDelta {
  std::size_t feature = 0;
  std::string name;
  double original = 0.0;  // standardized units
  double updated = 0.0;
  double original_raw = 0.0;  // inverse-scaled to input units
  double updated_raw = 0.0;
};

/// Sparse report of the coordinates changed between x_orig and x_cf.
std::vector<FeatureDelta> counterfactual_deltas(std::span<const double> x_orig,
                                                std::span<const double> x_cf,
                                                const std::vector<std::string>& names,
                                                const ScalerParams& scaler, double tolerance = 1e-9);

}  // namespace rejex

#endif  // REJEX_COUNTERFACTUAL_HPP_
