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

#ifndef REJEX_SURROGATE_HPP_
#define REJEX_SURROGATE_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "rejex/conformal.hpp"
#include "rejex/counterfactual.hpp"
#include "rejex/matrix.hpp"
#include "rejex/tree.hpp"

namespace rejex {

// Local labels: 1 = rejected, 0 = accepted.
inline constexpr int kLocalAccept = 0;
inline constexpr int kLocalReject = 1;

struct NeighborhoodConfig {
  int n_samples = 500;
  double sigma = 0.5;  // per-dimension standard deviation, standardized units
  int max_retries = 3;  // sigma doubles on every retry
  void validate() const;
};

struct SurrogateConfig {
  int max_depth = 3;
  int min_samples_leaf = 10;
};

/// Thrown when every sampled neighbor shares the label of x_orig even after
/// all retries.
class LocallyConstantReject : public std::runtime_error {
 public:
  LocallyConstantReject() : std::runtime_error("locally constant reject behavior") {}
};

struct LocalDataset {
  Matrix points;            // n_samples neighbors followed by x_orig
  std::vector<int> labels;  // kLocalReject iff credibility < theta
  double sigma_used = 0.0;
  int retries = 0;
};

/// n i.i.d. draws from N(x_orig, sigma^2 I).
Matrix sample_neighborhood(std::span<const double> x_orig, const NeighborhoodConfig& cfg,
                           std::uint64_t seed);

/// Labels sampled neighbors by the reject option at theta and appends x_orig
/// with the reject label. Resamples with doubled sigma while the neighbors
/// are all of one label; throws LocallyConstantReject after max_retries.
LocalDataset build_local_dataset(const ConformalPredictor& cp, double theta,
                                 std::span<const double> x_orig, const NeighborhoodConfig& cfg,
                                 std::uint64_t seed);

DecisionTree fit_surrogate(const LocalDataset& local, int max_depth, int min_samples_leaf,
                           std::uint64_t seed);

/// One split's share of the total impurity decrease.
struct SplitContribution {
  std::size_t feature = 0;
  double weight = 0.0;    // fraction of root samples reaching the node
  double decrease = 0.0;  // node impurity minus size-weighted child impurity
};

/// Sums weight * decrease per feature and normalizes to sum 1; all zeros if
/// there is nothing to sum.
std::vector<double> impurity_importance(std::span<const SplitContribution> splits,
                                        std::size_t feature_count);

std::vector<SplitContribution> split_contributions(const DecisionTree& tree);

/// Mean decrease in Gini impurity per feature, normalized to sum 1.
std::vector<double> gini_importance(const DecisionTree& tree);

enum class ExplanationMode { feat_imp, cf };

std::string_view to_string(ExplanationMode mode);
ExplanationMode parse_explanation_mode(std::string_view name);

struct Explanation {
  ExplanationMode mode = ExplanationMode::feat_imp;
  std::vector<double> fri;   // FeatImp only
  std::vector<double> x_cf;  // Cf only
  int sparsity = 0;
  bool surrogate_consistent = false;  // surrogate also rejects x_orig
  double sigma_used = 0.0;
  int retries = 0;
  // Agreement of a tree fit on 80 % of the local data with the held-out 20 %.
  double local_fidelity = 0.0;
  // Credibility of x_cf under the real reject option (Cf only); logged, not
  // guaranteed to clear theta.
  double cf_credibility = 0.0;
  double cf_distance = 0.0;
};

struct ExplainOptions {
  NeighborhoodConfig neighborhood;
  SurrogateConfig surrogate;
  CfConfig cf;
};

struct ExplanationPair {
  Explanation feat_imp;
  std::optional<Explanation> cf;  // empty when no surrogate leaf accepts
};

/// Both explanation modes from one local dataset and one surrogate. Each
/// member equals what explain_reject returns for that mode with the same
/// arguments.
ExplanationPair explain_reject_both(const ConformalPredictor& cp, double theta,
                                    std::span<const double> x_orig, const ExplainOptions& options,
                                    std::uint64_t seed);

Explanation explain_reject(const ConformalPredictor& cp, double theta, std::span<const double> x_orig,
                           ExplanationMode mode, const ExplainOptions& options, std::uint64_t seed);

}  // namespace rejex

#endif  // REJEX_SURROGATE_HPP_
