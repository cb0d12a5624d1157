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

#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "doctest.h"
#include "rejex/cli.hpp"
#include "rejex/conformal.hpp"
#include "rejex/serialization.hpp"

using namespace rejex;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_command(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("rejex_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  const Run bogus = run({"--bogus-flag"});
  CHECK(bogus.code == kExitUsage);
  CHECK(bogus.err.find("run-table1") != std::string::npos);
  CHECK(run({"frobnicate"}).code == kExitUsage);
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"run-table1"}).code == kExitUsage);
  CHECK(run({"explain", "--mode", "shap"}).code == kExitUsage);
  CHECK(run({"--help"}).code == kExitOk);
}

TEST_CASE("pipeline errors exit with 1") {
  const auto dir = scratch("bad");
  std::ofstream(dir / "cfg.json") << R"({"datasets": [{"name": "x", "path": "missing.csv"}]})";
  const Run r = run({"run-table1", "--config", (dir / "cfg.json").string(), "--out", (dir / "out").string()});
  CHECK(r.code == kExitPipelineError);
  CHECK(r.err.find("error") != std::string::npos);
}

TEST_CASE("make-data, fit, arc and explain") {
  const auto dir = scratch("flow");
  REQUIRE(run({"make-data", "--preset", "flip", "--out", (dir / "flip.csv").string()}).code == kExitOk);
  const Dataset flip = load_dataset((dir / "flip.csv").string(), "target");
  CHECK(flip.size() == 118);

  const std::string wine = std::string(REJEX_DATA_DIR) + "/wine.csv";
  const std::string model = (dir / "model.json").string();
  const std::string calib = (dir / "calib.csv").string();
  const std::string input_before = slurp(wine);
  REQUIRE(run({"fit", "--data", wine, "--classifier", "gnb", "--out", dir.string(), "--seed", "3"}).code == kExitOk);
  CHECK(slurp(wine) == input_before);

  const Run arc = run({"arc", "--model", model, "--calib", calib, "--out", (dir / "arc.csv").string()});
  REQUIRE(arc.code == kExitOk);
  CHECK(arc.out.find("knee_theta=") != std::string::npos);
  CHECK(slurp(dir / "arc.csv").rfind("theta,rejection_rate,accepted_accuracy\n", 0) == 0);

  // Explain calibration rows rejected at a generous threshold until one has
  // a reachable counterfactual; the others must fail cleanly with exit 1.
  ModelBundle bundle = load_model(model);
  const Dataset raw = load_dataset(calib, "target");
  const auto cp = ConformalPredictor::calibrate(std::make_shared<Model>(bundle.model), apply_scaler(bundle.scaler, raw));
  bool explained = false;
  for (std::size_t i = 0; i < raw.size() && !explained; ++i) {
    if (!(cp.credibility(bundle.scaler.transform(raw.features.row(i))) < 0.5)) continue;
    nlohmann::json sample;
    for (std::size_t j = 0; j < raw.dim(); ++j) sample[raw.feature_names[j]] = raw.features(i, j);
    std::ofstream(dir / "sample.json") << sample.dump();
    const std::vector<std::string> base{"explain", "--model", model, "--calib", calib,
                                        "--input", (dir / "sample.json").string(), "--theta", "0.5", "--mode"};
    auto with_mode = [&](const char* mode) {
      auto args = base;
      args.emplace_back(mode);
      return run(args);
    };
    const Run cf = with_mode("cf");
    if (cf.code != kExitOk) {
      CHECK(cf.code == kExitPipelineError);
      continue;
    }
    explained = true;
    const auto cf_doc = nlohmann::json::parse(cf.out);
    CHECK(cf_doc.at("mode") == "cf");
    CHECK(cf_doc.contains("delta"));
    CHECK(cf_doc.contains("sparsity"));
    CHECK(cf_doc.contains("surrogate_consistent"));
    CHECK(cf_doc.contains("sigma_used"));
    const Run fi = with_mode("featimp");
    REQUIRE(fi.code == kExitOk);
    const auto fi_doc = nlohmann::json::parse(fi.out);
    CHECK(fi_doc.at("mode") == "featimp");
    CHECK(fi_doc.at("fri").size() == raw.dim());
  }
  CHECK(explained);
}

TEST_CASE("model documents round-trip") {
  const Dataset wine = load_dataset(std::string(REJEX_DATA_DIR) + "/wine.csv", "target");
  const auto [scaler, scaled] = standardize(wine, {wine});
  for (const Hyperparams& hp :
       std::vector<Hyperparams>{KnnParams{3}, GnbParams{}, TreeParams{4, 2, 0}, ForestParams{5, 4, 0, true}}) {
    ModelBundle bundle{fit_classifier(hp, scaled[0], 1), scaler, wine.feature_names, wine.class_names, "target"};
    const ModelBundle back = model_from_json(nlohmann::json::parse(model_to_json(bundle).dump()));
    CHECK(back.model.hyperparams() == bundle.model.hyperparams());
    CHECK(back.feature_names == bundle.feature_names);
    for (std::size_t i = 0; i < scaled[0].size(); i += 7) {
      CHECK(back.model.predict_proba(scaled[0].features.row(i)) == bundle.model.predict_proba(scaled[0].features.row(i)));
    }
  }
  nlohmann::json bad = model_to_json(ModelBundle{fit_classifier(KnnParams{1}, scaled[0], 1), scaler, {}, {}, "target"});
  bad["version"] = 99;
  CHECK_THROWS(model_from_json(bad));
}

TEST_CASE("config documents") {
  const auto j = nlohmann::json::parse(R"({
    "seed": 7, "k_folds": 4, "classifiers": ["knn", "forest"],
    "datasets": [{"name": "w", "path": "data/wine.csv"}, {"name": "s", "synthetic": {"preset": "flip", "seed": 3}}],
    "theta": 0.2, "neighborhood": {"sigma": 0.25},
    "grids": {"knn": [{"k": 3}, {"k": 11}]}
  })");
  const ExperimentConfig cfg = experiment_config_from_json(j, "/base");
  CHECK(cfg.seed == 7);
  CHECK(cfg.k_folds == 4);
  CHECK(cfg.classifiers.size() == 2);
  CHECK(cfg.datasets[0].path == "/base/data/wine.csv");
  CHECK(cfg.datasets[1].synthetic->seed == 3);
  CHECK(cfg.datasets[1].synthetic->n == 118);
  CHECK(cfg.theta_override.value() == 0.2);
  CHECK(cfg.explain.neighborhood.sigma == 0.25);
  CHECK(cfg.grid_for(ClassifierKind::knn).size() == 2);
  CHECK_THROWS(experiment_config_from_json(nlohmann::json::parse(R"({"datasets": [], "k_folds": 1})")));
}

TEST_CASE("run-table1 writes its CSV") {
  const auto dir = scratch("table");
  std::ofstream(dir / "cfg.json") << R"({"k_folds": 3, "classifiers": ["gnb"], "max_explained_per_fold": 5,
    "datasets": [{"name": "Flip", "synthetic": {"preset": "flip"}}]})";
  const Run r = run({"run-table1", "--config", (dir / "cfg.json").string(), "--out", (dir / "results").string(),
                     "--workers", "2"});
  REQUIRE(r.code == kExitOk);
  CHECK(fs::exists(dir / "results" / "table1.csv"));
  CHECK(slurp(dir / "results" / "table1.csv").rfind("classifier,dataset,metric,mean,variance,n_explained", 0) == 0);
}
