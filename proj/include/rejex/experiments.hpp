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

#ifndef REJEX_EXPERIMENTS_HPP_
#define REJEX_EXPERIMENTS_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rejex/classifiers.hpp"
#include "rejex/data.hpp"
#include "rejex/surrogate.hpp"

namespace rejex {

struct DatasetSource {
  std::string name;
  std::string path;  // CSV; ignored when `synthetic` is set
  std::string label_column = "target";
  std::string missing_token;
  std::optional<SyntheticSpec> synthetic;
  std::size_t max_explained_per_fold = 0;  // 0: use the experiment-wide cap
};

struct PerturbationConfig {
  double feature_fraction = 0.3;
  double noise_sigma = 1.0;  // standardized units
};

struct ExperimentConfig {
  std::vector<DatasetSource> datasets;
  std::vector<ClassifierKind> classifiers = {ClassifierKind::knn, ClassifierKind::gnb,
                                             ClassifierKind::forest};
  std::size_t k_folds = 5;
  std::uint64_t seed = 42;
  ExplainOptions explain;
  PerturbationConfig perturbation;
  std::size_t max_explained_per_fold = 200;
  double calibration_fraction = 0.3;  // of each training fold
  std::size_t grid_search_max_rows = 2000;
  double knee_sensitivity = 1.0;
  std::optional<double> theta_override;
  std::map<ClassifierKind, std::vector<Hyperparams>> grids;  // missing kinds use default_grid

  void validate() const;
  const std::vector<Hyperparams>& grid_for(ClassifierKind kind) const;
};

enum class TableKind { algorithmic, groundtruth };

struct MetricSummary {
  std::string name;
  double mean = 0.0;
  double variance = 0.0;  // population variance over pooled samples
  std::size_t count = 0;
};

struct FoldDiagnostics {
  std::size_t fold = 0;
  std::string hyperparams;
  double theta = 0.0;
  bool knee_fallback = false;
  std::size_t n_test = 0;
  std::size_t n_candidates = 0;  // rejected (table 1) or flipped by noise (table 2)
  std::size_t n_explained = 0;
  std::size_t n_failed = 0;  // locally constant reject behavior
};

struct ResultCell {
  std::string classifier;
  std::string dataset;
  std::vector<MetricSummary> metrics;
  std::size_t n_explained = 0;
  std::vector<FoldDiagnostics> folds;

  bool no_rejects() const { return n_explained == 0; }
  const MetricSummary* metric(std::string_view name) const;
};

struct SampleStatus {
  std::size_t row = 0;  // index into the dataset
  double credibility_before = 0.0;
  double credibility_after = 0.0;
  bool accepted_before = false;
  bool rejected_after = false;
  bool explained = false;
};

struct PerturbationRecord {
  std::string classifier;
  std::string dataset;
  std::size_t fold = 0;
  std::vector<std::size_t> features;  // perturbed set S
  std::uint64_t noise_seed = 0;
  double theta = 0.0;
  std::vector<SampleStatus> samples;
};

struct ResultTable {
  TableKind kind = TableKind::algorithmic;
  std::vector<ResultCell> cells;                   // dataset-major, classifier-minor
  std::vector<PerturbationRecord> perturbations;  // ground-truth runs only

  const ResultCell* cell(std::string_view classifier, std::string_view dataset) const;
};

struct RunOptions {
  std::size_t workers = 1;
  std::function<void(const std::string&)> progress;
};

/// Loads (or generates) a data source and mean-imputes it.
Dataset load_source(const DatasetSource& source);

/// Explanation sparsity and surrogate agreement over every rejected test
/// sample, pooled across folds.
ResultTable run_algorithmic_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

/// Recovery of a randomly perturbed feature subset by explanations of the
/// samples the perturbation pushed into the reject region.
ResultTable run_groundtruth_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

/// |explained ∩ perturbed| / |perturbed|.
double feature_recall(const std::vector<std::size_t>& explained, const std::vector<std::size_t>& perturbed);

/// Metric rows: classifier,dataset,metric,mean,variance,n_explained. Full
/// precision; cells without explanations get a single no_rejects_observed row.
std::string to_csv(const ResultTable& table);

/// Human-readable table, values rounded to two decimals.
std::string to_text(const ResultTable& table);

}  // namespace rejex

#endif  // REJEX_EXPERIMENTS_HPP_
