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

#include "rejex/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rejex {

double nonconformity(std::span<const double> probs, int label) {
  if (probs.size() < 2) throw std::invalid_argument("nonconformity needs at least two classes");
  if (label < 0 || static_cast<std::size_t>(label) >= probs.size()) {
    throw std::invalid_argument("nonconformity: label out of range");
  }
  double other = -1.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (static_cast<int>(i) != label) other = std::max(other, probs[i]);
  }
  return other - probs[static_cast<std::size_t>(label)];
}

double p_value(std::span<const double> sorted_scores, double alpha) {
  const auto first = std::lower_bound(sorted_scores.begin(), sorted_scores.end(), alpha);
  const auto count = static_cast<double>(sorted_scores.end() - first);
  return count / static_cast<double>(sorted_scores.size() + 1);
}

ConformalPredictor::ConformalPredictor(std::shared_ptr<const ProbabilisticClassifier> model,
                                       std::vector<double> scores)
    : model_(std::move(model)), scores_(std::move(scores)) {
  if (!model_) throw std::invalid_argument("conformal predictor needs a model");
  if (scores_.empty()) throw std::invalid_argument("empty calibration set");
  std::sort(scores_.begin(), scores_.end());
}

ConformalPredictor ConformalPredictor::calibrate(std::shared_ptr<const ProbabilisticClassifier> model,
                                                 const Dataset& calib) {
  if (calib.size() == 0) throw std::invalid_argument("empty calibration set");
  if (!model) throw std::invalid_argument("conformal predictor needs a model");
  std::vector<double> scores;
  scores.reserve(calib.size());
  for (std::size_t i = 0; i < calib.size(); ++i) {
    scores.push_back(nonconformity(model->predict_proba(calib.features.row(i)), calib.labels[i]));
  }
  return ConformalPredictor(std::move(model), std::move(scores));
}

ConformalPredictor ConformalPredictor::from_scores(std::shared_ptr<const ProbabilisticClassifier> model,
                                                   std::vector<double> scores) {
  return ConformalPredictor(std::move(model), std::move(scores));
}

std::vector<double> ConformalPredictor::p_values(std::span<const double> x) const {
  const ProbVector probs = model_->predict_proba(x);
  std::vector<double> p(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    p[i] = p_value(scores_, nonconformity(probs, static_cast<int>(i)));
  }
  return p;
}

double ConformalPredictor::credibility(std::span<const double> x) const {
  const std::vector<double> p = p_values(x);
  return *std::max_element(p.begin(), p.end());
}

AugmentedPrediction ConformalPredictor::predict_with_reject(std::span<const double> x,
                                                            double theta) const {
  if (theta < 0.0) throw std::invalid_argument("reject threshold must be non-negative");
  AugmentedPrediction out;
  out.p_values = p_values(x);
  out.theta = theta;
  out.best_label = argmax(out.p_values);
  out.credibility = out.p_values[static_cast<std::size_t>(out.best_label)];
  double second = 0.0;
  for (std::size_t i = 0; i < out.p_values.size(); ++i) {
    if (static_cast<int>(i) != out.best_label) second = std::max(second, out.p_values[i]);
  }
  out.confidence = 1.0 - second;
  out.label = out.credibility < theta ? kRejectLabel : out.best_label;
  return out;
}

ARCurve accuracy_reject_curve(std::span<const double> credibilities, const std::vector<bool>& correct) {
  if (credibilities.empty()) throw std::invalid_argument("empty evaluation set");
  if (credibilities.size() != correct.size()) {
    throw std::invalid_argument("credibility and correctness lengths differ");
  }
  const std::size_t n = credibilities.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return credibilities[a] < credibilities[b]; });

  std::vector<double> thetas(credibilities.begin(), credibilities.end());
  thetas.push_back(0.0);
  thetas.push_back(1.0);
  std::sort(thetas.begin(), thetas.end());
  thetas.erase(std::unique(thetas.begin(), thetas.end()), thetas.end());

  const std::size_t total_correct =
      static_cast<std::size_t>(std::count(correct.begin(), correct.end(), true));
  ARCurve curve;
  curve.reserve(thetas.size());
  std::size_t rejected = 0;
  std::size_t rejected_correct = 0;
  for (double theta : thetas) {
    while (rejected < n && credibilities[order[rejected]] < theta) {
      if (correct[order[rejected]]) ++rejected_correct;
      ++rejected;
    }
    ArcPoint point;
    point.theta = theta;
    point.rejection_rate = static_cast<double>(rejected) / static_cast<double>(n);
    if (rejected < n) {
      point.accepted_accuracy = static_cast<double>(total_correct - rejected_correct) /
                                static_cast<double>(n - rejected);
    }
    curve.push_back(point);
  }
  return curve;
}

ARCurve accuracy_reject_curve(const ConformalPredictor& cp, const Dataset& eval_set) {
  if (eval_set.size() == 0) throw std::invalid_argument("empty evaluation set");
  std::vector<double> cred(eval_set.size());
  std::vector<bool> correct(eval_set.size());
  for (std::size_t i = 0; i < eval_set.size(); ++i) {
    const std::vector<double> p = cp.p_values(eval_set.features.row(i));
    const int label = argmax(p);
    cred[i] = p[static_cast<std::size_t>(label)];
    correct[i] = label == eval_set.labels[i];
  }
  return accuracy_reject_curve(cred, correct);
}

KneeResult knee_threshold(const ARCurve& curve, double sensitivity) {
  auto fallback = [&curve]() {
    KneeResult r;
    r.fallback = true;
    if (curve.empty()) return r;
    std::vector<std::size_t> order(curve.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return curve[a].theta < curve[b].theta; });
    r.index = order[(order.size() - 1) / 2];
    r.theta = curve[r.index].theta;
    r.rejection_rate = curve[r.index].rejection_rate;
    r.accepted_accuracy = curve[r.index].accepted_accuracy.value_or(0.0);
    return r;
  };

  // Defined points ordered by threshold; equal rejection rates collapse onto
  // the lowest threshold producing them.
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (curve[i].accepted_accuracy) idx.push_back(i);
  }
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return curve[a].theta < curve[b].theta; });
  std::vector<std::size_t> pts;
  for (std::size_t i : idx) {
    if (pts.empty() || curve[i].rejection_rate != curve[pts.back()].rejection_rate) pts.push_back(i);
  }
  std::stable_sort(pts.begin(), pts.end(), [&](std::size_t a, std::size_t b) {
    return curve[a].rejection_rate < curve[b].rejection_rate;
  });
  const std::size_t n = pts.size();
  if (n < 3) return fallback();

  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = curve[pts[i]].rejection_rate;
    ys[i] = *curve[pts[i]].accepted_accuracy;
  }
  const auto [xmin, xmax] = std::minmax_element(xs.begin(), xs.end());
  const auto [ymin, ymax] = std::minmax_element(ys.begin(), ys.end());
  const double xr = *xmax - *xmin;
  const double yr = *ymax - *ymin;
  if (!(xr > 0.0) || !(yr > 0.0)) return fallback();
  const double x0 = *xmin, y0 = *ymin;
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = (xs[i] - x0) / xr;
    ys[i] = (ys[i] - y0) / yr;
  }

  // Orientation: direction from the end points, curvature from the signed
  // area between the curve and its chord. Every case is mapped onto a
  // concave increasing curve by reflecting x and/or y.
  const bool increasing = ys.back() >= ys.front();
  double area = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    auto chord = [&](double x) { return ys.front() + (ys.back() - ys.front()) * x; };
    const double a = ys[i - 1] - chord(xs[i - 1]);
    const double b = ys[i] - chord(xs[i]);
    area += 0.5 * (a + b) * (xs[i] - xs[i - 1]);
  }
  const bool concave = area >= 0.0;
  const bool flip_x = increasing != concave;
  const bool flip_y = !concave;

  std::vector<double> tx(n), diff(n);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t src = flip_x ? n - 1 - i : i;
    tx[i] = flip_x ? 1.0 - xs[src] : xs[src];
    const double ty = flip_y ? 1.0 - ys[src] : ys[src];
    diff[i] = ty - tx[i];
    order[i] = pts[src];
  }

  const double step = (tx.back() - tx.front()) / static_cast<double>(n - 1);
  std::vector<std::size_t> maxima;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (diff[i] > diff[i - 1] && diff[i] >= diff[i + 1]) maxima.push_back(i);
  }

  bool found = false;
  std::size_t knee = 0;
  for (std::size_t m = 0; m < maxima.size(); ++m) {
    const std::size_t i = maxima[m];
    const double threshold = diff[i] - sensitivity * step;
    const std::size_t stop = m + 1 < maxima.size() ? maxima[m + 1] : n;
    bool drops = false;
    for (std::size_t j = i + 1; j < stop; ++j) {
      if (diff[j] < threshold) {
        drops = true;
        break;
      }
    }
    if (drops && (!found || diff[i] > diff[knee])) {
      knee = i;
      found = true;
    }
  }
  if (!found) return fallback();

  KneeResult r;
  r.index = order[knee];
  r.theta = curve[r.index].theta;
  r.rejection_rate = curve[r.index].rejection_rate;
  r.accepted_accuracy = *curve[r.index].accepted_accuracy;
  return r;
}

}  // namespace rejex
