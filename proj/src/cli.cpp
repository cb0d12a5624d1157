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

#include "rejex/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>
#include <optional>
#include <thread>

#include "CLI11.hpp"
#include "rejex/conformal.hpp"
#include "rejex/experiments.hpp"
#include "rejex/random.hpp"
#include "rejex/serialization.hpp"

namespace rejex {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOptions {
  std::string config;
  std::string out = "results";
  std::optional<std::uint64_t> seed;
  std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  int verbosity = 0;
};

void ensure_writable_dir(const fs::path& dir) {
  fs::create_directories(dir);
  const fs::path probe = dir / ".rejex_write_probe";
  {
    std::ofstream f(probe);
    if (!f) throw std::runtime_error("output directory '" + dir.string() + "' is not writable");
  }
  fs::remove(probe);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  f << text;
}

json perturbations_to_json(const ResultTable& table) {
  json out = json::array();
  for (const auto& p : table.perturbations) {
    json samples = json::array();
    for (const auto& s : p.samples) {
      samples.push_back(json{{"row", s.row},
                             {"credibility_before", s.credibility_before},
                             {"credibility_after", s.credibility_after},
                             {"accepted_before", s.accepted_before},
                             {"rejected_after", s.rejected_after},
                             {"explained", s.explained}});
    }
    out.push_back(json{{"classifier", p.classifier},
                       {"dataset", p.dataset},
                       {"fold", p.fold},
                       {"features", p.features},
                       {"noise_seed", p.noise_seed},
                       {"theta", p.theta},
                       {"samples", samples}});
  }
  return out;
}

json diagnostics_to_json(const ResultTable& table) {
  json out = json::array();
  for (const auto& cell : table.cells) {
    for (const auto& f : cell.folds) {
      out.push_back(json{{"classifier", cell.classifier},
                         {"dataset", cell.dataset},
                         {"fold", f.fold},
                         {"hyperparams", f.hyperparams},
                         {"theta", f.theta},
                         {"knee_fallback", f.knee_fallback},
                         {"n_test", f.n_test},
                         {"n_candidates", f.n_candidates},
                         {"n_explained", f.n_explained},
                         {"n_failed", f.n_failed}});
    }
  }
  return out;
}

int run_table(TableKind kind, const CommonOptions& common, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg = load_experiment_config(common.config);
  if (common.seed) cfg.seed = *common.seed;
  const fs::path dir(common.out);
  ensure_writable_dir(dir);

  RunOptions options;
  options.workers = std::max<std::size_t>(1, common.workers);
  if (common.verbosity > 0) {
    options.progress = [&err](const std::string& msg) { err << msg << '\n'; };
  }
  const ResultTable table = kind == TableKind::algorithmic ? run_algorithmic_experiment(cfg, options)
                                                           : run_groundtruth_experiment(cfg, options);
  const std::string stem = kind == TableKind::algorithmic ? "table1" : "table2";
  write_text(dir / (stem + ".csv"), to_csv(table));
  write_text(dir / (stem + "_diagnostics.json"), diagnostics_to_json(table).dump(2) + "\n");
  if (kind == TableKind::groundtruth) {
    write_text(dir / "table2_perturbations.json", perturbations_to_json(table).dump(2) + "\n");
  }
  out << to_text(table);
  return kExitOk;
}

// Calibration rows in raw units, relabelled to the model's class ids and
// standardized with the model's scaler.
Dataset load_calibration(const ModelBundle& bundle, const std::string& path) {
  Dataset raw = load_dataset(path, bundle.label_column);
  if (raw.has_missing()) throw std::runtime_error("calibration data contains missing values");
  if (raw.dim() != bundle.model.feature_count()) {
    throw std::runtime_error("calibration data has " + std::to_string(raw.dim()) + " features, model expects " +
                             std::to_string(bundle.model.feature_count()));
  }
  if (!bundle.class_names.empty()) {
    for (int& label : raw.labels) {
      const std::string& name = raw.class_names[static_cast<std::size_t>(label)];
      const auto it = std::find(bundle.class_names.begin(), bundle.class_names.end(), name);
      if (it == bundle.class_names.end()) {
        throw std::runtime_error("calibration label '" + name + "' is unknown to the model");
      }
      label = static_cast<int>(it - bundle.class_names.begin());
    }
    raw.class_names = bundle.class_names;
    raw.class_count = bundle.model.class_count();
  }
  return apply_scaler(bundle.scaler, raw);
}

ConformalPredictor load_predictor(ModelBundle& bundle, const Dataset& calib) {
  auto model = std::make_shared<const Model>(bundle.model);
  return ConformalPredictor::calibrate(std::move(model), calib);
}

std::vector<double> read_sample(const json& j, const ModelBundle& bundle) {
  const json& body = j.is_object() && j.contains("x") ? j.at("x") : j;
  if (body.is_array()) return body.get<std::vector<double>>();
  if (!body.is_object()) throw std::runtime_error("sample must be a JSON array or object");
  std::vector<double> x(bundle.feature_names.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const auto& name = bundle.feature_names[k];
    if (!body.contains(name)) throw std::runtime_error("sample is missing feature '" + name + "'");
    x[k] = body.at(name).get<double>();
  }
  return x;
}

std::string arc_to_csv(const ARCurve& curve) {
  std::string s = "theta,rejection_rate,accepted_accuracy\n";
  char buf[128];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,", p.theta, p.rejection_rate);
    s += buf;
    if (p.accepted_accuracy) {
      std::snprintf(buf, sizeof buf, "%.17g", *p.accepted_accuracy);
      s += buf;
    }
    s += '\n';
  }
  return s;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Conformal reject option with local explanations of reject", "rejex"};
  app.require_subcommand(1, 1);

  CommonOptions common;
  auto add_common = [&common](CLI::App* sub, bool needs_config) {
    auto* cfg = sub->add_option("--config", common.config, "Experiment config (JSON)");
    if (needs_config) cfg->required()->check(CLI::ExistingFile);
    sub->add_option("--out", common.out, "Output directory");
    sub->add_option("--seed", common.seed, "Override the master seed");
    sub->add_option("--workers", common.workers, "Worker threads (does not affect results)")
        ->check(CLI::PositiveNumber);
    sub->add_flag("-v,--verbose", common.verbosity, "Progress on standard error");
  };

  auto* table1 = app.add_subcommand("run-table1", "Explanation sparsity and surrogate agreement per cell");
  add_common(table1, true);
  auto* table2 = app.add_subcommand("run-table2", "Recovery of perturbed features by explanations");
  add_common(table2, true);

  std::string model_path, calib_path, input_path, mode_name = "featimp";
  std::optional<double> theta;
  double sensitivity = 1.0;
  auto* explain = app.add_subcommand("explain", "Explain why one sample is rejected (JSON on standard output)");
  explain->add_option("--model", model_path, "Model document from `fit`")->required()->check(CLI::ExistingFile);
  explain->add_option("--calib", calib_path, "Calibration CSV in raw units")->required()->check(CLI::ExistingFile);
  explain->add_option("--input", input_path, "Sample JSON: array, {\"x\": [...]} or {name: value}")
      ->required()
      ->check(CLI::ExistingFile);
  explain->add_option("--mode", mode_name, "featimp or cf")->check(CLI::IsMember({"featimp", "cf"}));
  explain->add_option("--theta", theta, "Reject threshold; default is the calibration knee");
  explain->add_option("--seed", common.seed, "Seed for neighborhood sampling");
  explain->add_option("--config", common.config, "Experiment config supplying explanation settings")
      ->check(CLI::ExistingFile);

  std::string arc_out;
  auto* arc = app.add_subcommand("arc", "Accuracy-reject curve on calibration data and its knee");
  arc->add_option("--model", model_path, "Model document from `fit`")->required()->check(CLI::ExistingFile);
  arc->add_option("--calib", calib_path, "Calibration CSV in raw units")->required()->check(CLI::ExistingFile);
  arc->add_option("--out", arc_out, "CSV path; standard output when omitted");
  arc->add_option("--sensitivity", sensitivity, "Knee detection sensitivity")->check(CLI::NonNegativeNumber);

  std::string spec_path, preset, data_out;
  auto* make_data = app.add_subcommand("make-data", "Write a synthetic dataset as CSV");
  auto* spec_opt = make_data->add_option("--spec", spec_path, "Synthetic spec JSON")->check(CLI::ExistingFile);
  make_data->add_option("--preset", preset, "flip or t21")
      ->check(CLI::IsMember({"flip", "t21"}))
      ->excludes(spec_opt);
  make_data->add_option("--out", data_out, "CSV path")->required();
  make_data->add_option("--seed", common.seed, "Override the spec seed");

  std::string data_path, label_column = "target", kind_name = "knn";
  double calibration_fraction = 0.3;
  auto* fit = app.add_subcommand("fit", "Fit a classifier and write model.json plus calib.csv");
  fit->add_option("--data", data_path, "Training CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--label-column", label_column, "Label column name");
  fit->add_option("--classifier", kind_name, "knn, gnb, tree or forest");
  fit->add_option("--calibration-fraction", calibration_fraction, "Held-out calibration share")
      ->check(CLI::Range(0.05, 0.95));
  fit->add_option("--out", common.out, "Output directory");
  fit->add_option("--seed", common.seed, "Master seed");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    if (e.get_exit_code() != 0) err << app.help();
    return kExitUsage;
  }

  try {
    if (table1->parsed()) return run_table(TableKind::algorithmic, common, out, err);
    if (table2->parsed()) return run_table(TableKind::groundtruth, common, out, err);

    if (explain->parsed()) {
      ModelBundle bundle = load_model(model_path);
      const Dataset calib = load_calibration(bundle, calib_path);
      const ConformalPredictor cp = load_predictor(bundle, calib);
      ExplainOptions options;
      std::uint64_t seed = common.seed.value_or(42);
      if (!common.config.empty()) {
        const ExperimentConfig cfg = load_experiment_config(common.config);
        options = cfg.explain;
        if (!common.seed) seed = cfg.seed;
      }
      const double t = theta ? *theta : knee_threshold(accuracy_reject_curve(cp, calib)).theta;
      const std::vector<double> raw = read_sample(read_json_file(input_path), bundle);
      if (raw.size() != bundle.model.feature_count()) {
        throw std::runtime_error("sample has " + std::to_string(raw.size()) + " features, model expects " +
                                 std::to_string(bundle.model.feature_count()));
      }
      const std::vector<double> x = bundle.scaler.transform(raw);
      const double cred = cp.credibility(x);
      if (!(cred < t)) {
        err << "sample is accepted (credibility " << cred << " >= theta " << t << "); nothing to explain\n";
        return kExitPipelineError;
      }
      const Explanation e = explain_reject(cp, t, x, parse_explanation_mode(mode_name), options, seed);
      json doc = explanation_to_json(e, x, bundle.feature_names, bundle.scaler, options.cf.tolerance);
      doc["theta"] = t;
      doc["credibility"] = cred;
      out << doc.dump(2) << '\n';
      return kExitOk;
    }

    if (arc->parsed()) {
      ModelBundle bundle = load_model(model_path);
      const Dataset calib = load_calibration(bundle, calib_path);
      const ConformalPredictor cp = load_predictor(bundle, calib);
      const ARCurve curve = accuracy_reject_curve(cp, calib);
      const KneeResult knee = knee_threshold(curve, sensitivity);
      const std::string csv = arc_to_csv(curve);
      if (arc_out.empty()) {
        out << csv;
      } else {
        const fs::path p(arc_out);
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
        write_text(p, csv);
      }
      (arc_out.empty() ? err : out) << "knee_theta=" << knee.theta << " rejection_rate=" << knee.rejection_rate
                                    << " accepted_accuracy=" << knee.accepted_accuracy
                                    << " fallback=" << (knee.fallback ? "true" : "false") << '\n';
      return kExitOk;
    }

    if (make_data->parsed()) {
      SyntheticSpec spec = preset == "flip"  ? flip_like_spec()
                           : preset == "t21" ? t21_like_spec()
                           : !spec_path.empty()
                               ? synthetic_spec_from_json(read_json_file(spec_path))
                               : throw std::runtime_error("make-data needs --spec or --preset");
      if (common.seed) spec.seed = *common.seed;
      const fs::path p(data_out);
      if (p.has_parent_path()) fs::create_directories(p.parent_path());
      write_dataset_csv(make_synthetic(spec), data_out);
      return kExitOk;
    }

    if (fit->parsed()) {
      const std::uint64_t seed = common.seed.value_or(42);
      const Dataset data = impute_mean(load_dataset(data_path, label_column));
      std::vector<std::size_t> all(data.size());
      std::iota(all.begin(), all.end(), std::size_t{0});
      const auto [fit_rows, calib_rows] =
          stratified_holdout(data.labels, all, calibration_fraction, derive_seed(seed, {1}));
      const Dataset fit_raw = data.subset(fit_rows);
      const ScalerParams scaler = fit_scaler(fit_raw.features);
      const Dataset fit_set = apply_scaler(scaler, fit_raw);
      const ClassifierKind kind = parse_classifier_kind(kind_name);
      const Hyperparams hp = grid_search(default_grid(kind), fit_set, derive_seed(seed, {2}), 2000);
      ModelBundle bundle{fit_classifier(hp, fit_set, derive_seed(seed, {3})), scaler, data.feature_names,
                         data.class_names, label_column};
      const fs::path dir(common.out);
      ensure_writable_dir(dir);
      save_model(bundle, (dir / "model.json").string());
      write_dataset_csv(data.subset(calib_rows), (dir / "calib.csv").string(), label_column);
      out << "fitted " << to_string(kind) << " (" << describe(hp) << "); wrote " << (dir / "model.json").string()
          << " and " << (dir / "calib.csv").string() << '\n';
      return kExitOk;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitPipelineError;
  }
  return kExitUsage;
}

}  // namespace rejex
