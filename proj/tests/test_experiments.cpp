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

#include <algorithm>

#include "doctest.h"
#include "rejex/experiments.hpp"

using namespace rejex;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  DatasetSource wine;
  wine.name = "Wine";
  wine.path = std::string(REJEX_DATA_DIR) + "/wine.csv";
  DatasetSource flip;
  flip.name = "Flip";
  flip.synthetic = flip_like_spec();
  cfg.datasets = {wine, flip};
  cfg.classifiers = {ClassifierKind::knn, ClassifierKind::gnb};
  cfg.k_folds = 3;
  cfg.max_explained_per_fold = 8;
  return cfg;
}

}  // namespace

TEST_CASE("feature recall") {
  CHECK(feature_recall({1, 3}, {1, 2, 3}) == doctest::Approx(2.0 / 3.0));
  CHECK(feature_recall({0, 1, 2, 3}, {1, 2}) == 1.0);
  CHECK(feature_recall({}, {1, 2}) == 0.0);
  CHECK_THROWS(feature_recall({1}, {}));
}

TEST_CASE("config validation") {
  ExperimentConfig cfg = small_config();
  cfg.k_folds = 1;
  CHECK_THROWS(cfg.validate());
  cfg = small_config();
  cfg.calibration_fraction = 1.0;
  CHECK_THROWS(cfg.validate());
  cfg = small_config();
  cfg.datasets.clear();
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("algorithmic experiment") {
  const ExperimentConfig cfg = small_config();
  const ResultTable table = run_algorithmic_experiment(cfg, {1, {}});
  REQUIRE(table.cells.size() == 4);
  CHECK(table.cells[0].dataset == "Wine");
  CHECK(table.cells[0].classifier == "kNN");

  SUBCASE("metrics stay in range") {
    for (const auto& cell : table.cells) {
      if (cell.no_rejects()) continue;
      const auto* acc = cell.metric("accuracy");
      REQUIRE(acc != nullptr);
      CHECK(acc->mean >= 0.0);
      CHECK(acc->mean <= 1.0);
      const auto* fi = cell.metric("featimp_sparsity");
      const auto* cf = cell.metric("cf_sparsity");
      REQUIRE(fi != nullptr);
      REQUIRE(cf != nullptr);
      CHECK(fi->mean <= 7.0);  // at most one feature per internal node of a depth-3 tree
      CHECK(cf->mean <= 3.0);  // a path crosses at most three thresholds
      for (const auto& m : cell.metrics) CHECK(m.variance >= 0.0);
    }
  }
  SUBCASE("worker count does not change the output") {
    const ResultTable parallel = run_algorithmic_experiment(cfg, {3, {}});
    CHECK(to_csv(parallel) == to_csv(table));
  }
  SUBCASE("theta = 0 rejects nothing") {
    ExperimentConfig zero = cfg;
    zero.theta_override = 0.0;
    const ResultTable none = run_algorithmic_experiment(zero, {2, {}});
    for (const auto& cell : none.cells) CHECK(cell.no_rejects());
    CHECK(to_csv(none).find("no_rejects_observed") != std::string::npos);
    CHECK(to_text(none).find("no rejects observed") != std::string::npos);
  }
}

TEST_CASE("ground-truth experiment") {
  const ExperimentConfig cfg = small_config();
  const ResultTable table = run_groundtruth_experiment(cfg, {2, {}});
  REQUIRE(table.cells.size() == 4);

  SUBCASE("explained samples were accepted before and rejected after") {
    REQUIRE_FALSE(table.perturbations.empty());
    for (const auto& rec : table.perturbations) {
      CHECK(rec.features.size() == 4);  // ceil(0.3 d) for d in {12, 13}
      for (const auto& s : rec.samples) {
        if (s.explained) {
          CHECK(s.accepted_before);
          CHECK(s.rejected_after);
        }
      }
    }
  }
  SUBCASE("recalls are fractions") {
    for (const auto& cell : table.cells) {
      for (const char* name : {"featimp_recall", "cf_recall"}) {
        if (const auto* m = cell.metric(name)) {
          CHECK(m->mean >= 0.0);
          CHECK(m->mean <= 1.0);
        }
      }
    }
  }
  SUBCASE("zero noise changes no reject decision") {
    ExperimentConfig quiet = cfg;
    quiet.perturbation.noise_sigma = 0.0;
    for (const auto& cell : run_groundtruth_experiment(quiet, {2, {}}).cells) CHECK(cell.no_rejects());
  }
}
