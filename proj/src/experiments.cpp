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

#include "rejex/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "rejex/conformal.hpp"
#include "rejex/random.hpp"

namespace rejex {

namespace {

// Stream tags for derive_seed.
constexpr std::uint64_t kFoldStream = 1;
constexpr std::uint64_t kHoldoutStream = 2;
constexpr std::uint64_t kGridStream = 3;
constexpr std::uint64_t kFitStream = 4;
constexpr std::uint64_t kExplainStream = 5;
constexpr std::uint64_t kSubsetStream = 6;
constexpr std::uint64_t kNoiseStream = 7;

std::uint64_t name_key(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string classifier_label(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::knn: return "kNN";
    case ClassifierKind::gnb: return "GNB";
    case ClassifierKind::tree: return "DecisionTree";
    case ClassifierKind::forest: return "RandomForest";
  }
  return "unknown";
}

// Per-sample values of one metric, pooled later in fold order.
using Samples = std::vector<double>;

struct TaskOutput {
  std::map<std::string, Samples> values;
  FoldDiagnostics diagnostics;
  std::optional<PerturbationRecord> perturbation;
};

struct PreparedFold {
  Dataset fit;
  Dataset calib;
  Dataset test;
  std::vector<std::size_t> test_rows;  // dataset row of every test sample
};

PreparedFold prepare_fold(const Dataset& data, const FoldAssignment& folds, std::size_t fold,
                          double calibration_fraction, std::uint64_t seed) {
  std::vector<std::size_t> train_rows;
  for (std::size_t g = 0; g < folds.size(); ++g) {
    if (g != fold) train_rows.insert(train_rows.end(), folds[g].begin(), folds[g].end());
  }
  std::sort(train_rows.begin(), train_rows.end());
  auto [fit_rows, calib_rows] = stratified_holdout(data.labels, train_rows, calibration_fraction, seed);
  if (calib_rows.empty()) throw std::runtime_error("training fold too small for a calibration split");

  const Dataset fit_raw = data.subset(fit_rows);
  const ScalerParams scaler = fit_scaler(fit_raw.features);
  PreparedFold out;
  out.fit = apply_scaler(scaler, fit_raw);
  out.calib = apply_scaler(scaler, data.subset(calib_rows));
  out.test = apply_scaler(scaler, data.subset(folds[fold]));
  out.test_rows = folds[fold];
  return out;
}

struct FittedReject {
  ConformalPredictor cp;
  double theta;
  bool fallback;
  std::string hyperparams;
};

FittedReject fit_reject_option(const ExperimentConfig& cfg, ClassifierKind kind, const PreparedFold& fold,
                               std::uint64_t task_seed) {
  const Hyperparams hp = grid_search(cfg.grid_for(kind), fold.fit, derive_seed(task_seed, {kGridStream}),
                                     cfg.grid_search_max_rows);
  auto model = std::make_shared<const Model>(fit_classifier(hp, fold.fit, derive_seed(task_seed, {kFitStream})));
  ConformalPredictor cp = ConformalPredictor::calibrate(model, fold.calib);
  double theta = 0.0;
  bool fallback = false;
  if (cfg.theta_override) {
    theta = *cfg.theta_override;
  } else {
    const KneeResult knee = knee_threshold(accuracy_reject_curve(cp, fold.calib), cfg.knee_sensitivity);
    theta = knee.theta;
    fallback = knee.fallback;
  }
  return {std::move(cp), theta, fallback, describe(hp)};
}

std::vector<std::size_t> explained_features(const Explanation& e, double tolerance,
                                            std::span<const double> x_orig) {
  std::vector<std::size_t> out;
  if (e.mode == ExplanationMode::feat_imp) {
    for (std::size_t j = 0; j < e.fri.size(); ++j) {
      if (e.fri[j] > 0.0) out.push_back(j);
    }
  } else {
    for (std::size_t j = 0; j < e.x_cf.size(); ++j) {
      if (std::abs(e.x_cf[j] - x_orig[j]) > tolerance) out.push_back(j);
    }
  }
  return out;
}

struct Task {
  std::size_t dataset;
  std::size_t classifier;
  std::size_t fold;
};

TaskOutput run_algorithmic_task(const ExperimentConfig& cfg, const DatasetSource& source, const Dataset& data,
                                const FoldAssignment& folds, ClassifierKind kind, std::size_t fold) {
  const std::uint64_t ds_key = name_key(source.name);
  const std::uint64_t task_seed =
      derive_seed(cfg.seed, {ds_key, static_cast<std::uint64_t>(kind), static_cast<std::uint64_t>(fold)});
  const PreparedFold prepared =
      prepare_fold(data, folds, fold, cfg.calibration_fraction, derive_seed(cfg.seed, {ds_key, kHoldoutStream, fold}));
  const FittedReject reject = fit_reject_option(cfg, kind, prepared, task_seed);
  const std::size_t cap = source.max_explained_per_fold > 0 ? source.max_explained_per_fold : cfg.max_explained_per_fold;

  TaskOutput out;
  out.diagnostics.fold = fold;
  out.diagnostics.hyperparams = reject.hyperparams;
  out.diagnostics.theta = reject.theta;
  out.diagnostics.knee_fallback = reject.fallback;
  out.diagnostics.n_test = prepared.test.size();
  for (const char* name : {"accuracy", "featimp_sparsity", "cf_sparsity", "local_fidelity"}) out.values[name];

  for (std::size_t i = 0; i < prepared.test.size(); ++i) {
    const auto x = prepared.test.features.row(i);
    if (!(reject.cp.credibility(x) < reject.theta)) continue;
    ++out.diagnostics.n_candidates;
    if (out.diagnostics.n_explained + out.diagnostics.n_failed >= cap) continue;
    try {
      const ExplanationPair e = explain_reject_both(
          reject.cp, reject.theta, x, cfg.explain, derive_seed(task_seed, {kExplainStream, prepared.test_rows[i]}));
      ++out.diagnostics.n_explained;
      out.values["accuracy"].push_back(e.feat_imp.surrogate_consistent ? 1.0 : 0.0);
      out.values["featimp_sparsity"].push_back(e.feat_imp.sparsity);
      out.values["local_fidelity"].push_back(e.feat_imp.local_fidelity);
      if (e.cf) out.values["cf_sparsity"].push_back(e.cf->sparsity);
    } catch (const LocallyConstantReject&) {
      ++out.diagnostics.n_failed;
    }
  }
  return out;
}

TaskOutput run_groundtruth_task(const ExperimentConfig& cfg, const DatasetSource& source, const Dataset& data,
                                const FoldAssignment& folds, ClassifierKind kind, std::size_t fold) {
  const std::uint64_t ds_key = name_key(source.name);
  const std::uint64_t task_seed =
      derive_seed(cfg.seed, {ds_key, static_cast<std::uint64_t>(kind), static_cast<std::uint64_t>(fold)});
  const PreparedFold prepared =
      prepare_fold(data, folds, fold, cfg.calibration_fraction, derive_seed(cfg.seed, {ds_key, kHoldoutStream, fold}));
  const FittedReject reject = fit_reject_option(cfg, kind, prepared, task_seed);
  const std::size_t cap = source.max_explained_per_fold > 0 ? source.max_explained_per_fold : cfg.max_explained_per_fold;

  // S and the noise are shared by every classifier on this fold.
  const std::size_t d = data.dim();
  const auto subset_size = static_cast<std::size_t>(
      std::clamp<double>(std::ceil(cfg.perturbation.feature_fraction * static_cast<double>(d) - 1e-9), 1.0,
                         static_cast<double>(d)));
  std::vector<std::size_t> features(d);
  std::iota(features.begin(), features.end(), std::size_t{0});
  Rng subset_rng(derive_seed(cfg.seed, {ds_key, kSubsetStream, fold}));
  std::shuffle(features.begin(), features.end(), subset_rng);
  features.resize(subset_size);
  std::sort(features.begin(), features.end());
  const std::uint64_t noise_seed = derive_seed(cfg.seed, {ds_key, kNoiseStream, fold});

  TaskOutput out;
  out.diagnostics.fold = fold;
  out.diagnostics.hyperparams = reject.hyperparams;
  out.diagnostics.theta = reject.theta;
  out.diagnostics.knee_fallback = reject.fallback;
  out.diagnostics.n_test = prepared.test.size();
  for (const char* name : {"accuracy", "featimp_recall", "cf_recall", "surrogate_accuracy"}) out.values[name];

  PerturbationRecord record;
  record.classifier = classifier_label(kind);
  record.dataset = source.name;
  record.fold = fold;
  record.features = features;
  record.noise_seed = noise_seed;
  record.theta = reject.theta;

  std::vector<double> perturbed(d);
  for (std::size_t i = 0; i < prepared.test.size(); ++i) {
    const auto x = prepared.test.features.row(i);
    std::copy(x.begin(), x.end(), perturbed.begin());
    if (cfg.perturbation.noise_sigma > 0.0) {
      Rng rng(derive_seed(noise_seed, {prepared.test_rows[i]}));
      std::normal_distribution<double> noise(0.0, cfg.perturbation.noise_sigma);
      for (std::size_t j : features) perturbed[j] += noise(rng);
    }
    const int predicted = argmax(reject.cp.model().predict_proba(perturbed));
    out.values["accuracy"].push_back(predicted == prepared.test.labels[i] ? 1.0 : 0.0);

    SampleStatus status;
    status.row = prepared.test_rows[i];
    status.credibility_before = reject.cp.credibility(x);
    status.credibility_after = reject.cp.credibility(perturbed);
    status.accepted_before = !(status.credibility_before < reject.theta);
    status.rejected_after = status.credibility_after < reject.theta;
    if (status.accepted_before && status.rejected_after) {
      ++out.diagnostics.n_candidates;
      if (out.diagnostics.n_explained + out.diagnostics.n_failed < cap) {
        try {
          const ExplanationPair e = explain_reject_both(
              reject.cp, reject.theta, perturbed, cfg.explain,
              derive_seed(task_seed, {kExplainStream, prepared.test_rows[i]}));
          ++out.diagnostics.n_explained;
          status.explained = true;
          out.values["featimp_recall"].push_back(
              feature_recall(explained_features(e.feat_imp, cfg.explain.cf.tolerance, perturbed), features));
          out.values["surrogate_accuracy"].push_back(e.feat_imp.surrogate_consistent ? 1.0 : 0.0);
          if (e.cf) {
            out.values["cf_recall"].push_back(
                feature_recall(explained_features(*e.cf, cfg.explain.cf.tolerance, perturbed), features));
          }
        } catch (const LocallyConstantReject&) {
          ++out.diagnostics.n_failed;
        }
      }
    }
    record.samples.push_back(status);
  }
  out.perturbation = std::move(record);
  return out;
}

MetricSummary summarize(const std::string& name, const Samples& values) {
  MetricSummary m;
  m.name = name;
  m.count = values.size();
  if (values.empty()) return m;
  m.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - m.mean) * (v - m.mean);
  m.variance = ss / static_cast<double>(values.size());
  return m;
}

ResultTable run_experiment(const ExperimentConfig& cfg, const RunOptions& options, TableKind kind) {
  cfg.validate();
  std::vector<Dataset> datasets;
  std::vector<FoldAssignment> folds;
  for (const auto& source : cfg.datasets) {
    if (options.progress) options.progress("loading " + source.name);
    datasets.push_back(load_source(source));
    const Dataset& data = datasets.back();
    folds.push_back(stratified_kfold_split(data.labels, data.class_count, cfg.k_folds,
                                           derive_seed(cfg.seed, {name_key(source.name), kFoldStream})));
  }

  std::vector<Task> tasks;
  for (std::size_t d = 0; d < cfg.datasets.size(); ++d) {
    for (std::size_t c = 0; c < cfg.classifiers.size(); ++c) {
      for (std::size_t f = 0; f < cfg.k_folds; ++f) tasks.push_back({d, c, f});
    }
  }

  std::vector<TaskOutput> outputs(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t t = next++; t < tasks.size(); t = next++) {
      const Task& task = tasks[t];
      try {
        const auto& source = cfg.datasets[task.dataset];
        const ClassifierKind ck = cfg.classifiers[task.classifier];
        outputs[t] = kind == TableKind::algorithmic
                         ? run_algorithmic_task(cfg, source, datasets[task.dataset], folds[task.dataset], ck, task.fold)
                         : run_groundtruth_task(cfg, source, datasets[task.dataset], folds[task.dataset], ck, task.fold);
        if (options.progress) {
          options.progress(classifier_label(ck) + " / " + source.name + " fold " + std::to_string(task.fold) +
                           ": " + std::to_string(outputs[t].diagnostics.n_explained) + " explained");
        }
      } catch (...) {
        errors[t] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, tasks.size()));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  ResultTable table;
  table.kind = kind;
  std::size_t t = 0;
  for (std::size_t d = 0; d < cfg.datasets.size(); ++d) {
    for (std::size_t c = 0; c < cfg.classifiers.size(); ++c) {
      ResultCell cell;
      cell.classifier = classifier_label(cfg.classifiers[c]);
      cell.dataset = cfg.datasets[d].name;
      std::map<std::string, Samples> pooled;
      std::vector<std::string> order;
      for (std::size_t f = 0; f < cfg.k_folds; ++f, ++t) {
        TaskOutput& out = outputs[t];
        cell.n_explained += out.diagnostics.n_explained;
        cell.folds.push_back(out.diagnostics);
        for (auto& [name, values] : out.values) {
          if (!pooled.contains(name)) order.push_back(name);
          auto& dst = pooled[name];
          dst.insert(dst.end(), values.begin(), values.end());
        }
        if (out.perturbation) table.perturbations.push_back(std::move(*out.perturbation));
      }
      const std::vector<std::string> preferred =
          kind == TableKind::algorithmic
              ? std::vector<std::string>{"accuracy", "featimp_sparsity", "cf_sparsity", "local_fidelity"}
              : std::vector<std::string>{"accuracy", "featimp_recall", "cf_recall", "surrogate_accuracy"};
      for (const auto& name : preferred) {
        if (pooled.contains(name)) cell.metrics.push_back(summarize(name, pooled[name]));
      }
      table.cells.push_back(std::move(cell));
    }
  }
  return table;
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (datasets.empty()) throw std::invalid_argument("experiment config lists no datasets");
  if (classifiers.empty()) throw std::invalid_argument("experiment config lists no classifiers");
  if (k_folds < 2) throw std::invalid_argument("k_folds must be at least 2");
  if (!(perturbation.feature_fraction > 0.0 && perturbation.feature_fraction <= 1.0)) {
    throw std::invalid_argument("feature_fraction must be in (0, 1]");
  }
  if (perturbation.noise_sigma < 0.0) throw std::invalid_argument("noise_sigma must be non-negative");
  if (!(calibration_fraction > 0.0 && calibration_fraction < 1.0)) {
    throw std::invalid_argument("calibration_fraction must be in (0, 1)");
  }
  if (theta_override && *theta_override < 0.0) throw std::invalid_argument("theta must be non-negative");
  explain.neighborhood.validate();
  explain.cf.validate();
  for (const auto& [kind, grid] : grids) {
    if (grid.empty()) throw std::invalid_argument("empty hyperparameter grid");
    for (const auto& hp : grid) {
      if (kind_of(hp) != kind) throw std::invalid_argument("grid entry of the wrong classifier kind");
      rejex::validate(hp);
    }
  }
}

const std::vector<Hyperparams>& ExperimentConfig::grid_for(ClassifierKind kind) const {
  static const std::map<ClassifierKind, std::vector<Hyperparams>> defaults = {
      {ClassifierKind::knn, default_grid(ClassifierKind::knn)},
      {ClassifierKind::gnb, default_grid(ClassifierKind::gnb)},
      {ClassifierKind::tree, default_grid(ClassifierKind::tree)},
      {ClassifierKind::forest, default_grid(ClassifierKind::forest)},
  };
  const auto it = grids.find(kind);
  return it != grids.end() ? it->second : defaults.at(kind);
}

const MetricSummary* ResultCell::metric(std::string_view name) const {
  for (const auto& m : metrics) {
    if (m.name == name) return &m;
  }
  return nullptr;
}

const ResultCell* ResultTable::cell(std::string_view classifier, std::string_view dataset) const {
  for (const auto& c : cells) {
    if (c.classifier == classifier && c.dataset == dataset) return &c;
  }
  return nullptr;
}

Dataset load_source(const DatasetSource& source) {
  Dataset data = source.synthetic ? make_synthetic(*source.synthetic)
                                  : load_dataset(source.path, source.label_column, source.missing_token);
  return impute_mean(data);
}

ResultTable run_algorithmic_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  return run_experiment(cfg, options, TableKind::algorithmic);
}

ResultTable run_groundtruth_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  return run_experiment(cfg, options, TableKind::groundtruth);
}

double feature_recall(const std::vector<std::size_t>& explained, const std::vector<std::size_t>& perturbed) {
  if (perturbed.empty()) throw std::invalid_argument("feature_recall: empty perturbed set");
  std::size_t hits = 0;
  for (std::size_t j : perturbed) {
    if (std::find(explained.begin(), explained.end(), j) != explained.end()) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(perturbed.size());
}

std::string to_csv(const ResultTable& table) {
  std::ostringstream out;
  out << "classifier,dataset,metric,mean,variance,n_explained\n";
  for (const auto& cell : table.cells) {
    if (cell.no_rejects()) {
      out << cell.classifier << ',' << cell.dataset << ",no_rejects_observed,,,0\n";
      continue;
    }
    for (const auto& m : cell.metrics) {
      out << cell.classifier << ',' << cell.dataset << ',' << m.name << ',';
      if (m.count > 0) out << format_number(m.mean) << ',' << format_number(m.variance);
      else out << ',';
      out << ',' << cell.n_explained << '\n';
    }
  }
  return out.str();
}

std::string to_text(const ResultTable& table) {
  const bool algorithmic = table.kind == TableKind::algorithmic;
  const char* featimp = algorithmic ? "featimp_sparsity" : "featimp_recall";
  const char* cf = algorithmic ? "cf_sparsity" : "cf_recall";
  auto fmt = [](const MetricSummary* m) {
    if (m == nullptr || m->count == 0) return std::string("-");
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f ± %.2f", m->mean, m->variance);
    return std::string(buf);
  };
  std::ostringstream out;
  out << (algorithmic ? "Algorithmic properties: mean (± variance) accuracy and sparsity\n"
                      : "Goodness of explanations: mean (± variance) recall of perturbed features\n");
  char line[256];
  std::snprintf(line, sizeof(line), "%-14s %-16s %-16s %-16s %-16s %s\n", "Classifier", "DataSet", "Accuracy",
                "FeatImp", "Cf", "explained");
  out << line;
  for (const auto& cell : table.cells) {
    if (cell.no_rejects()) {
      std::snprintf(line, sizeof(line), "%-14s %-16s no rejects observed\n", cell.classifier.c_str(),
                    cell.dataset.c_str());
    } else {
      std::snprintf(line, sizeof(line), "%-14s %-16s %-16s %-16s %-16s %zu\n", cell.classifier.c_str(),
                    cell.dataset.c_str(), fmt(cell.metric("accuracy")).c_str(), fmt(cell.metric(featimp)).c_str(),
                    fmt(cell.metric(cf)).c_str(), cell.n_explained);
    }
    out << line;
  }
  return out.str();
}

}  // namespace rejex
