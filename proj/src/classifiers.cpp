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

#include "rejex/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "rejex/random.hpp"

namespace rejex {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

ProbVector knn_proba(const KnnState& s, int class_count, std::span<const double> x) {
  const std::size_t k = static_cast<std::size_t>(s.k);
  // Sorted (distance, row) of the k best so far. Rows are visited in
  // increasing order and only strictly closer rows displace, so distance
  // ties keep the lower training row.
  std::vector<std::pair<double, std::size_t>> best;
  best.reserve(k + 1);
  const std::size_t d = x.size();
  for (std::size_t i = 0; i < s.points.rows(); ++i) {
    const double* p = s.points.row(i).data();
    double dist = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double delta = p[j] - x[j];
      dist += delta * delta;
    }
    if (best.size() == k && !(dist < best.back().first)) continue;
    auto pos = std::upper_bound(best.begin(), best.end(), dist,
                                [](double v, const auto& e) { return v < e.first; });
    best.insert(pos, {dist, i});
    if (best.size() > k) best.pop_back();
  }
  ProbVector p(static_cast<std::size_t>(class_count), 0.0);
  for (const auto& [dist, row] : best) p[static_cast<std::size_t>(s.labels[row])] += 1.0;
  for (double& v : p) v /= static_cast<double>(best.size());
  return p;
}

ProbVector gnb_proba(const GnbState& s, std::span<const double> x) {
  const std::size_t c = s.log_priors.size();
  std::vector<double> log_joint(c);
  for (std::size_t k = 0; k < c; ++k) {
    double lj = s.log_priors[k];
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double var = s.variances(k, j);
      const double delta = x[j] - s.means(k, j);
      lj -= 0.5 * std::log(2.0 * std::numbers::pi * var) + delta * delta / (2.0 * var);
    }
    log_joint[k] = lj;
  }
  const double top = *std::max_element(log_joint.begin(), log_joint.end());
  ProbVector p(c);
  double total = 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    p[k] = std::exp(log_joint[k] - top);
    total += p[k];
  }
  for (double& v : p) v /= total;
  return p;
}

ProbVector forest_proba(const ForestState& s, int class_count, std::span<const double> x) {
  ProbVector p(static_cast<std::size_t>(class_count), 0.0);
  for (const auto& tree : s.trees) {
    const ProbVector q = tree.predict_proba(x);
    for (std::size_t k = 0; k < p.size(); ++k) p[k] += q[k];
  }
  for (double& v : p) v /= static_cast<double>(s.trees.size());
  return p;
}

KnnState fit_knn(const KnnParams& params, const Dataset& train) {
  return KnnState{train.features, train.labels, params.k};
}

GnbState fit_gnb(const GnbParams& params, const Dataset& train) {
  const std::size_t c = static_cast<std::size_t>(train.class_count);
  const std::size_t d = train.dim();
  GnbState s{Matrix(c, d), Matrix(c, d), std::vector<double>(c, 0.0)};
  std::vector<double> counts(c, 0.0);
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto k = static_cast<std::size_t>(train.labels[i]);
    counts[k] += 1.0;
    for (std::size_t j = 0; j < d; ++j) s.means(k, j) += train.features(i, j);
  }
  for (std::size_t k = 0; k < c; ++k) {
    for (std::size_t j = 0; j < d; ++j) s.means(k, j) /= counts[k];
  }
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto k = static_cast<std::size_t>(train.labels[i]);
    for (std::size_t j = 0; j < d; ++j) {
      const double delta = train.features(i, j) - s.means(k, j);
      s.variances(k, j) += delta * delta;
    }
  }
  const double n = static_cast<double>(train.size());
  for (std::size_t k = 0; k < c; ++k) {
    for (std::size_t j = 0; j < d; ++j) {
      s.variances(k, j) = s.variances(k, j) / counts[k] + params.variance_smoothing;
    }
    s.log_priors[k] = std::log(counts[k] / n);
  }
  return s;
}

ForestState fit_forest(const ForestParams& params, const Dataset& train, std::uint64_t seed) {
  const std::size_t n = train.size();
  TreeParams tree_params;
  tree_params.max_depth = params.max_depth;
  tree_params.min_samples_leaf = 1;
  tree_params.max_features =
      params.max_features > 0
          ? params.max_features
          : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(train.dim()))));
  ForestState s;
  s.trees.reserve(static_cast<std::size_t>(params.n_trees));
  std::vector<std::size_t> rows(n);
  for (int t = 0; t < params.n_trees; ++t) {
    const std::uint64_t tree_seed = derive_seed(seed, {static_cast<std::uint64_t>(t)});
    if (params.bootstrap) {
      Rng rng(derive_seed(tree_seed, {0xb005u}));
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (auto& r : rows) r = pick(rng);
      std::sort(rows.begin(), rows.end());
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    s.trees.push_back(DecisionTree::fit(train.features, train.labels, train.class_count, rows,
                                        tree_params, tree_seed));
  }
  return s;
}

}  // namespace

std::string_view to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::knn: return "knn";
    case ClassifierKind::gnb: return "gnb";
    case ClassifierKind::tree: return "tree";
    case ClassifierKind::forest: return "forest";
  }
  return "unknown";
}

ClassifierKind parse_classifier_kind(std::string_view name) {
  if (name == "knn") return ClassifierKind::knn;
  if (name == "gnb") return ClassifierKind::gnb;
  if (name == "tree") return ClassifierKind::tree;
  if (name == "forest" || name == "random_forest" || name == "rf") return ClassifierKind::forest;
  throw std::invalid_argument("unknown classifier kind '" + std::string(name) + "'");
}

ClassifierKind kind_of(const Hyperparams& params) {
  return std::visit(Overloaded{
                        [](const KnnParams&) { return ClassifierKind::knn; },
                        [](const GnbParams&) { return ClassifierKind::gnb; },
                        [](const TreeParams&) { return ClassifierKind::tree; },
                        [](const ForestParams&) { return ClassifierKind::forest; },
                    },
                    params);
}

void validate(const Hyperparams& params) {
  std::visit(Overloaded{
                 [](const KnnParams& p) {
                   if (p.k < 1 || p.k % 2 == 0) {
                     throw std::invalid_argument("knn: k must be an odd positive integer");
                   }
                 },
                 [](const GnbParams& p) {
                   if (!(p.variance_smoothing > 0.0)) {
                     throw std::invalid_argument("gnb: variance_smoothing must be positive");
                   }
                 },
                 [](const TreeParams& p) {
                   if (p.max_depth < 0 || p.min_samples_leaf < 1 || p.max_features < 0) {
                     throw std::invalid_argument("tree: invalid hyperparameters");
                   }
                 },
                 [](const ForestParams& p) {
                   if (p.n_trees < 1 || p.max_depth < 0 || p.max_features < 0) {
                     throw std::invalid_argument("forest: invalid hyperparameters");
                   }
                 },
             },
             params);
}

std::string describe(const Hyperparams& params) {
  std::ostringstream out;
  std::visit(Overloaded{
                 [&](const KnnParams& p) { out << "knn(k=" << p.k << ")"; },
                 [&](const GnbParams& p) { out << "gnb(var_smoothing=" << p.variance_smoothing << ")"; },
                 [&](const TreeParams& p) {
                   out << "tree(max_depth=" << p.max_depth << ", min_samples_leaf=" << p.min_samples_leaf
                       << ")";
                 },
                 [&](const ForestParams& p) {
                   out << "forest(n_trees=" << p.n_trees << ", max_depth=" << p.max_depth
                       << ", max_features=" << p.max_features << ")";
                 },
             },
             params);
  return out.str();
}

Model::Model(Hyperparams params, State state, std::size_t feature_count, int class_count)
    : params_(std::move(params)),
      state_(std::move(state)),
      feature_count_(feature_count),
      class_count_(class_count) {}

ProbVector Model::predict_proba(std::span<const double> x) const {
  if (x.size() != feature_count_) throw std::invalid_argument("dimension mismatch");
  return std::visit(Overloaded{
                        [&](const KnnState& s) { return knn_proba(s, class_count_, x); },
                        [&](const GnbState& s) { return gnb_proba(s, x); },
                        [&](const DecisionTree& t) { return t.predict_proba(x); },
                        [&](const ForestState& s) { return forest_proba(s, class_count_, x); },
                    },
                    state_);
}

int Model::predict(std::span<const double> x) const { return argmax(predict_proba(x)); }

int argmax(std::span<const double> values) {
  return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
}

Model fit_classifier(const Hyperparams& params, const Dataset& train, std::uint64_t seed) {
  validate(params);
  train.validate();
  std::vector<bool> present(static_cast<std::size_t>(train.class_count), false);
  for (int y : train.labels) present[static_cast<std::size_t>(y)] = true;
  for (std::size_t k = 0; k < present.size(); ++k) {
    if (!present[k]) {
      throw std::invalid_argument("class " + std::to_string(k) + " is absent from the training data");
    }
  }
  Model::State state = std::visit(
      Overloaded{
          [&](const KnnParams& p) -> Model::State { return fit_knn(p, train); },
          [&](const GnbParams& p) -> Model::State { return fit_gnb(p, train); },
          [&](const TreeParams& p) -> Model::State {
            return DecisionTree::fit(train.features, train.labels, train.class_count, p, seed);
          },
          [&](const ForestParams& p) -> Model::State { return fit_forest(p, train, seed); },
      },
      params);
  return Model(params, std::move(state), train.dim(), train.class_count);
}

double accuracy(const ProbabilisticClassifier& model, const Dataset& data) {
  if (data.size() == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (argmax(model.predict_proba(data.features.row(i))) == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

Hyperparams grid_search(const std::vector<Hyperparams>& grid, const Dataset& train,
                        std::uint64_t seed, std::size_t max_rows) {
  if (grid.empty()) throw std::invalid_argument("grid_search: empty grid");
  if (grid.size() == 1) return grid.front();

  Dataset data = train;
  if (max_rows > 0 && train.size() > max_rows) {
    std::vector<std::size_t> all(train.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const double keep = static_cast<double>(max_rows) / static_cast<double>(train.size());
    auto [dropped, kept] = stratified_holdout(train.labels, all, keep, derive_seed(seed, {0x5ab}));
    data = train.subset(kept);
  }

  const std::size_t k = std::min<std::size_t>(3, data.size());
  if (k < 2) return grid.front();
  const FoldAssignment folds =
      stratified_kfold_split(data.labels, data.class_count, k, derive_seed(seed, {0xf01d}));

  struct Split {
    Dataset fit;
    Dataset held_out;
    std::uint64_t seed;
  };
  std::vector<Split> splits;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<std::size_t> rest;
    for (std::size_t g = 0; g < folds.size(); ++g) {
      if (g != f) rest.insert(rest.end(), folds[g].begin(), folds[g].end());
    }
    std::sort(rest.begin(), rest.end());
    Dataset fit = data.subset(rest);
    std::vector<bool> present(static_cast<std::size_t>(fit.class_count), false);
    for (int y : fit.labels) present[static_cast<std::size_t>(y)] = true;
    // A fold whose training part misses a class cannot be fit by any
    // candidate; dropping it affects every candidate alike.
    if (std::find(present.begin(), present.end(), false) != present.end()) continue;
    splits.push_back({std::move(fit), data.subset(folds[f]), derive_seed(seed, {f})});
  }
  if (splits.empty()) {
    throw std::invalid_argument("grid_search: no cross-validation fold contains every class");
  }

  std::size_t best = 0;
  double best_score = -1.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double score = 0.0;
    for (const auto& s : splits) {
      score += accuracy(fit_classifier(grid[i], s.fit, s.seed), s.held_out);
    }
    score /= static_cast<double>(splits.size());
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return grid[best];
}

std::vector<Hyperparams> default_grid(ClassifierKind kind) {
  std::vector<Hyperparams> grid;
  switch (kind) {
    case ClassifierKind::knn:
      for (int k : {1, 3, 5, 7, 9}) grid.emplace_back(KnnParams{k});
      break;
    case ClassifierKind::gnb:
      for (double s : {1e-9, 1e-6, 1e-3}) grid.emplace_back(GnbParams{s});
      break;
    case ClassifierKind::tree:
      for (int depth : {3, 5, 10, 0}) grid.emplace_back(TreeParams{depth, 1, 0});
      break;
    case ClassifierKind::forest:
      for (int trees : {10, 50, 100}) {
        for (int depth : {5, 10, 0}) grid.emplace_back(ForestParams{trees, depth, 0, true});
      }
      break;
  }
  return grid;
}

}  // namespace rejex
