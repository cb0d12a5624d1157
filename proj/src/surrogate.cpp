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

#include "rejex/surrogate.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "rejex/random.hpp"

namespace rejex {

namespace {

constexpr std::uint64_t kSurrogateStream = 0x5e77;
constexpr std::uint64_t kFidelityStream = 0xf1de;

double holdout_fidelity(const LocalDataset& local, const SurrogateConfig& cfg, std::uint64_t seed) {
  const std::size_t n = local.points.rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t test_n = std::max<std::size_t>(1, n / 5);
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(test_n), order.end());
  std::sort(train.begin(), train.end());
  const TreeParams params{cfg.max_depth, cfg.min_samples_leaf, 0};
  const DecisionTree tree = DecisionTree::fit(local.points, local.labels, 2, train, params, seed);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < test_n; ++i) {
    const std::size_t r = order[i];
    if (tree.predict(local.points.row(r)) == local.labels[r]) ++agree;
  }
  return static_cast<double>(agree) / static_cast<double>(test_n);
}

}  // namespace

void NeighborhoodConfig::validate() const {
  if (n_samples < 10) throw std::invalid_argument("neighborhood needs at least 10 samples");
  if (!(sigma > 0.0)) throw std::invalid_argument("neighborhood sigma must be positive");
  if (max_retries < 0) throw std::invalid_argument("max_retries must be non-negative");
}

Matrix sample_neighborhood(std::span<const double> x_orig, const NeighborhoodConfig& cfg,
                           std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, cfg.sigma);
  Matrix points(static_cast<std::size_t>(cfg.n_samples), x_orig.size());
  for (std::size_t i = 0; i < points.rows(); ++i) {
    auto row = points.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = x_orig[j] + noise(rng);
  }
  return points;
}

LocalDataset build_local_dataset(const ConformalPredictor& cp, double theta,
                                 std::span<const double> x_orig, const NeighborhoodConfig& cfg,
                                 std::uint64_t seed) {
  cfg.validate();
  if (x_orig.size() != cp.feature_count()) throw std::invalid_argument("dimension mismatch");
  NeighborhoodConfig attempt = cfg;
  for (int retry = 0; retry <= cfg.max_retries; ++retry) {
    LocalDataset local;
    local.points = sample_neighborhood(x_orig, attempt, derive_seed(seed, {static_cast<std::uint64_t>(retry)}));
    local.labels.reserve(local.points.rows() + 1);
    for (std::size_t i = 0; i < local.points.rows(); ++i) {
      local.labels.push_back(cp.credibility(local.points.row(i)) < theta ? kLocalReject : kLocalAccept);
    }
    const auto rejected = std::count(local.labels.begin(), local.labels.end(), kLocalReject);
    const bool mixed = rejected > 0 && static_cast<std::size_t>(rejected) < local.labels.size();
    if (mixed) {
      local.points.append_row(x_orig);
      local.labels.push_back(kLocalReject);
      local.sigma_used = attempt.sigma;
      local.retries = retry;
      return local;
    }
    attempt.sigma *= 2.0;
  }
  throw LocallyConstantReject();
}

DecisionTree fit_surrogate(const LocalDataset& local, int max_depth, int min_samples_leaf,
                           std::uint64_t seed) {
  const bool has_accept = std::find(local.labels.begin(), local.labels.end(), kLocalAccept) != local.labels.end();
  const bool has_reject = std::find(local.labels.begin(), local.labels.end(), kLocalReject) != local.labels.end();
  if (!has_accept || !has_reject) {
    throw std::invalid_argument("surrogate needs both accepted and rejected samples");
  }
  const TreeParams params{max_depth, min_samples_leaf, 0};
  return DecisionTree::fit(local.points, local.labels, 2, params, seed);
}

std::vector<double> impurity_importance(std::span<const SplitContribution> splits,
                                        std::size_t feature_count) {
  std::vector<double> importance(feature_count, 0.0);
  for (const auto& s : splits) {
    if (s.feature >= feature_count) throw std::invalid_argument("split feature out of range");
    importance[s.feature] += s.weight * s.decrease;
  }
  const double total = std::accumulate(importance.begin(), importance.end(), 0.0);
  if (total > 0.0) {
    for (double& v : importance) v /= total;
  }
  return importance;
}

std::vector<SplitContribution> split_contributions(const DecisionTree& tree) {
  std::vector<SplitContribution> out;
  const auto& nodes = tree.nodes();
  if (nodes.empty()) return out;
  const double root_n = nodes.front().sample_count();
  for (const TreeNode& node : nodes) {
    if (node.is_leaf()) continue;
    const TreeNode& l = nodes[static_cast<std::size_t>(node.left)];
    const TreeNode& r = nodes[static_cast<std::size_t>(node.right)];
    const double n = node.sample_count();
    const double child = (l.sample_count() * gini(l.class_counts) + r.sample_count() * gini(r.class_counts)) / n;
    out.push_back({static_cast<std::size_t>(node.feature), n / root_n, gini(node.class_counts) - child});
  }
  return out;
}

std::vector<double> gini_importance(const DecisionTree& tree) {
  const auto splits = split_contributions(tree);
  return impurity_importance(splits, tree.feature_count());
}

std::string_view to_string(ExplanationMode mode) {
  return mode == ExplanationMode::feat_imp ? "featimp" : "cf";
}

ExplanationMode parse_explanation_mode(std::string_view name) {
  if (name == "featimp" || name == "feat_imp" || name == "fri") return ExplanationMode::feat_imp;
  if (name == "cf" || name == "counterfactual") return ExplanationMode::cf;
  throw std::invalid_argument("unknown explanation mode '" + std::string(name) + "'");
}

ExplanationPair explain_reject_both(const ConformalPredictor& cp, double theta,
                                    std::span<const double> x_orig, const ExplainOptions& options,
                                    std::uint64_t seed) {
  if (x_orig.size() != cp.feature_count()) throw std::invalid_argument("dimension mismatch");
  if (!(cp.credibility(x_orig) < theta)) {
    throw std::invalid_argument("sample is not rejected at the given threshold");
  }
  const LocalDataset local = build_local_dataset(cp, theta, x_orig, options.neighborhood, seed);
  const DecisionTree surrogate =
      fit_surrogate(local, options.surrogate.max_depth, options.surrogate.min_samples_leaf,
                    derive_seed(seed, {kSurrogateStream}));

  Explanation base;
  base.surrogate_consistent = surrogate.predict(x_orig) == kLocalReject;
  base.sigma_used = local.sigma_used;
  base.retries = local.retries;
  base.local_fidelity = holdout_fidelity(local, options.surrogate, derive_seed(seed, {kFidelityStream}));

  ExplanationPair out;
  out.feat_imp = base;
  out.feat_imp.mode = ExplanationMode::feat_imp;
  out.feat_imp.fri = gini_importance(surrogate);
  out.feat_imp.sparsity = static_cast<int>(
      std::count_if(out.feat_imp.fri.begin(), out.feat_imp.fri.end(), [](double v) { return v > 0.0; }));

  if (!leaf_regions(surrogate, kLocalAccept).empty()) {
    const Counterfactual cf = closest_counterfactual(surrogate, x_orig, kLocalAccept, options.cf);
    Explanation e = base;
    e.mode = ExplanationMode::cf;
    e.x_cf = cf.point;
    e.cf_distance = cf.distance;
    e.sparsity = sparsity(cf.point, x_orig, options.cf.tolerance);
    e.cf_credibility = cp.credibility(cf.point);
    out.cf = std::move(e);
  }
  return out;
}

Explanation explain_reject(const ConformalPredictor& cp, double theta, std::span<const double> x_orig,
                           ExplanationMode mode, const ExplainOptions& options, std::uint64_t seed) {
  ExplanationPair both = explain_reject_both(cp, theta, x_orig, options, seed);
  if (mode == ExplanationMode::feat_imp) return std::move(both.feat_imp);
  if (!both.cf) throw std::domain_error("target class unreachable");
  return std::move(*both.cf);
}

}  // namespace rejex
