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

#ifndef REJEX_CLASSIFIERS_HPP_
#define REJEX_CLASSIFIERS_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rejex/data.hpp"
#include "rejex/matrix.hpp"
#include "rejex/tree.hpp"

namespace rejex {

/// Anything that maps a point to a class-probability vector. The reject
/// option and its explanations only ever talk to this interface.
class ProbabilisticClassifier {
 public:
  virtual ~ProbabilisticClassifier() = default;
  virtual ProbVector predict_proba(std::span<const double> x) const = 0;
  virtual std::size_t feature_count() const = 0;
  virtual int class_count() const = 0;
};

enum class ClassifierKind { knn, gnb, tree, forest };

std::string_view to_string(ClassifierKind kind);
ClassifierKind parse_classifier_kind(std::string_view name);

struct KnnParams {
  int k = 5;
  friend bool operator==(const KnnParams&, const KnnParams&) = default;
};

struct GnbParams {
  double variance_smoothing = 1e-9;  // added to every per-class variance
  friend bool operator==(const GnbParams&, const GnbParams&) = default;
};

struct ForestParams {
  int n_trees = 100;
  int max_depth = 0;     // 0 means unbounded
  int max_features = 0;  // 0 means ceil(sqrt(d))
  bool bootstrap = true;
  friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

inline bool operator==(const TreeParams& a, const TreeParams& b) {
  return a.max_depth == b.max_depth && a.min_samples_leaf == b.min_samples_leaf &&
         a.max_features == b.max_features;
}

using Hyperparams = std::variant<KnnParams, GnbParams, TreeParams, ForestParams>;

ClassifierKind kind_of(const Hyperparams& params);
void validate(const Hyperparams& params);
std::string describe(const Hyperparams& params);

struct KnnState {
  Matrix points;
  std::vector<int> labels;
  int k = 1;
};

struct GnbState {
  Matrix means;      // c x d
  Matrix variances;  // c x d, smoothing already added
  std::vector<double> log_priors;
};

struct ForestState {
  std::vector<DecisionTree> trees;
};

/// A fitted classifier. Immutable after construction.
class Model final : public ProbabilisticClassifier {
 public:
  using State = std::variant<KnnState, GnbState, DecisionTree, ForestState>;

  Model(Hyperparams params, State state, std::size_t feature_count, int class_count);

  ProbVector predict_proba(std::span<const double> x) const override;
  int predict(std::span<const double> x) const;
  std::size_t feature_count() const override { return feature_count_; }
  int class_count() const override { return class_count_; }

  ClassifierKind kind() const { return kind_of(params_); }
  const Hyperparams& hyperparams() const { return params_; }
  const State& state() const { return state_; }

 private:
  Hyperparams params_;
  State state_;
  std::size_t feature_count_;
  int class_count_;
};

/// Deterministic per (inputs, seed). Every class in [0, class_count) must
/// occur in `train`.
Model fit_classifier(const Hyperparams& params, const Dataset& train, std::uint64_t seed);

inline ProbVector predict_proba(const ProbabilisticClassifier& model, std::span<const double> x) {
  return model.predict_proba(x);
}

/// Index of the largest entry; ties go to the lower index.
int argmax(std::span<const double> values);

double accuracy(const ProbabilisticClassifier& model, const Dataset& data);

/// Returns the grid point with the highest mean accuracy under stratified
/// 3-fold cross validation on `train`; ties keep the earliest grid entry.
/// When max_rows > 0 and train is larger, the search runs on a stratified
/// subsample of max_rows rows.
Hyperparams grid_search(const std::vector<Hyperparams>& grid, const Dataset& train,
                        std::uint64_t seed, std::size_t max_rows = 0);

std::vector<Hyperparams> default_grid(ClassifierKind kind);

}  // namespace rejex

#endif  // REJEX_CLASSIFIERS_HPP_
