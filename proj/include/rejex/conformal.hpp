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

#ifndef REJEX_CONFORMAL_HPP_
#define REJEX_CONFORMAL_HPP_

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "rejex/classifiers.hpp"
#include "rejex/data.hpp"

namespace rejex {

inline constexpr int kRejectLabel = -1;

/// Largest probability among the other classes minus the probability of
/// `label`. Lies in [-1, 1]; lower means more conforming.
double nonconformity(std::span<const double> probs, int label);

/// Number of sorted scores >= alpha, divided by (m + 1). The candidate point
/// itself is not counted, so the result can be exactly zero.
double p_value(std::span<const double> sorted_scores, double alpha);

struct AugmentedPrediction {
  int label = kRejectLabel;  // kRejectLabel when rejected
  int best_label = 0;        // argmax p-value, reported even when rejected
  std::vector<double> p_values;
  double confidence = 0.0;   // 1 - second largest p-value
  double credibility = 0.0;  // largest p-value; this is the reject score
  double theta = 0.0;

  bool rejected() const { return label == kRejectLabel; }
  double reject_score() const { return credibility; }
};

/// Inductive conformal predictor wrapped around an arbitrary probabilistic
/// classifier, used as a credibility-based reject option: a point is
/// rejected when its credibility is below the threshold.
class ConformalPredictor {
 public:
  /// `calib` must not have been used to fit `model`.
  static ConformalPredictor calibrate(std::shared_ptr<const ProbabilisticClassifier> model,
                                      const Dataset& calib);
  static ConformalPredictor from_scores(std::shared_ptr<const ProbabilisticClassifier> model,
                                        std::vector<double> scores);

  std::vector<double> p_values(std::span<const double> x) const;
  double credibility(std::span<const double> x) const;
  AugmentedPrediction predict_with_reject(std::span<const double> x, double theta) const;
  bool rejects(std::span<const double> x, double theta) const { return credibility(x) < theta; }

  std::span<const double> scores() const { return scores_; }
  std::size_t calibration_size() const { return scores_.size(); }
  const ProbabilisticClassifier& model() const { return *model_; }
  const std::shared_ptr<const ProbabilisticClassifier>& model_ptr() const { return model_; }
  std::size_t feature_count() const { return model_->feature_count(); }
  int class_count() const { return model_->class_count(); }

 private:
  ConformalPredictor(std::shared_ptr<const ProbabilisticClassifier> model, std::vector<double> scores);

  std::shared_ptr<const ProbabilisticClassifier> model_;
  std::vector<double> scores_;  // ascending
};

struct ArcPoint {
  double theta = 0.0;
  double rejection_rate = 0.0;
  std::optional<double> accepted_accuracy;  // empty when everything is rejected
};

using ARCurve = std::vector<ArcPoint>;

/// Accuracy-reject curve over thresholds {0, 1} and every distinct observed
/// credibility.
ARCurve accuracy_reject_curve(const ConformalPredictor& cp, const Dataset& eval_set);
ARCurve accuracy_reject_curve(std::span<const double> credibilities, const std::vector<bool>& correct);

struct KneeResult {
  double theta = 0.0;
  double rejection_rate = 0.0;
  double accepted_accuracy = 0.0;
  std::size_t index = 0;  // into the input curve
  bool fallback = false;  // no knee found; theta is the median candidate
};

/// Kneedle knee of the curve (rejection_rate, accepted_accuracy).
KneeResult knee_threshold(const ARCurve& curve, double sensitivity = 1.0);

}  // namespace rejex

#endif  // REJEX_CONFORMAL_HPP_
