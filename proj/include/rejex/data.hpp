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

#ifndef REJEX_DATA_HPP_
#define REJEX_DATA_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rejex/matrix.hpp"

namespace rejex {

/// Labeled feature matrix. Missing cells are NaN until impute_mean runs.
struct Dataset {
  Matrix features;
  std::vector<int> labels;
  std::vector<std::string> feature_names;
  int class_count = 0;
  // Original label strings, indexed by class id. Empty for synthetic data.
  std::vector<std::string> class_names;

  std::size_t size() const { return features.rows(); }
  std::size_t dim() const { return features.cols(); }
  bool has_missing() const;

  /// Throws std::invalid_argument if any structural invariant is violated.
  void validate() const;

  Dataset subset(std::span<const std::size_t> rows) const;
};

struct ScalerParams {
  std::vector<double> means;
  std::vector<double> stds;  // population standard deviation

  std::vector<double> transform(std::span<const double> x) const;
  std::vector<double> inverse(std::span<const double> z) const;
  std::size_t dim() const { return means.size(); }
};

using FoldAssignment = std::vector<std::vector<std::size_t>>;

struct SyntheticSpec {
  std::size_t n = 0;
  std::size_t d = 0;
  int c = 2;
  std::vector<double> class_weights;
  std::vector<std::size_t> relevant_features;
  std::uint64_t seed = 0;
  // Distance between neighboring class means along each relevant feature,
  // in units of the (unit) within-class standard deviation.
  double class_separation = 2.0;
  // Fraction of feature cells blanked out (left as NaN) after generation.
  double missing_fraction = 0.0;

  void validate() const;
};

// Shape-matched stand-ins for the two clinical data sets that cannot be
// redistributed: 118 x 12 with a few missing cells, and ~50000 x 18 with a
// 0.8 % minority class.
SyntheticSpec flip_like_spec(std::uint64_t seed = 7);
SyntheticSpec t21_like_spec(std::uint64_t seed = 21);

/// Reads a headered CSV. The label column is picked by name; label strings
/// are mapped to class ids in sorted order (numerically if all labels parse
/// as numbers). Cells equal to missing_token after trimming become NaN.
Dataset load_dataset(const std::string& path, const std::string& label_column,
                     const std::string& missing_token = "");

void write_dataset_csv(const Dataset& data, const std::string& path,
                       const std::string& label_column = "target");

/// Replaces NaN cells by the mean of the non-missing entries of their column.
Dataset impute_mean(const Dataset& data);

/// Fits mean/std on `reference` and applies (x - mean) / std to every target.
/// Zero-variance columns map to zero.
std::pair<ScalerParams, std::vector<Dataset>> standardize(
    const Dataset& reference, const std::vector<Dataset>& targets);

ScalerParams fit_scaler(const Matrix& reference);
Dataset apply_scaler(const ScalerParams& params, const Dataset& data);

/// Deterministic shuffled partition of 0..n-1 into k folds whose sizes
/// differ by at most one.
FoldAssignment kfold_split(std::size_t n, std::size_t k, std::uint64_t seed);

/// Like kfold_split, but each class is dealt round-robin across folds when
/// every class has at least k members; otherwise falls back to kfold_split.
FoldAssignment stratified_kfold_split(std::span<const int> labels,
                                      int class_count, std::size_t k,
                                      std::uint64_t seed);

/// Per-class shuffled split of `rows` into (first, second) where second
/// receives round(fraction * n_class) rows of each class, keeping at least
/// one row of each class in first.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(
    std::span<const int> labels, std::span<const std::size_t> rows,
    double fraction, std::uint64_t seed);

Dataset make_synthetic(const SyntheticSpec& spec);

}  // namespace rejex

#endif  // REJEX_DATA_HPP_
