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

#include "rejex/serialization.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace rejex {

using nlohmann::json;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

json matrix_to_json(const Matrix& m) {
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"values", m.values()}};
}

Matrix matrix_from_json(const json& j) {
  return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                j.at("values").get<std::vector<double>>());
}

json state_to_json(const Model::State& state) {
  return std::visit(Overloaded{
                        [](const KnnState& s) {
                          return json{{"points", matrix_to_json(s.points)}, {"labels", s.labels}, {"k", s.k}};
                        },
                        [](const GnbState& s) {
                          return json{{"means", matrix_to_json(s.means)},
                                      {"variances", matrix_to_json(s.variances)},
                                      {"log_priors", s.log_priors}};
                        },
                        [](const DecisionTree& t) { return tree_to_json(t); },
                        [](const ForestState& s) {
                          json trees = json::array();
                          for (const auto& t : s.trees) trees.push_back(tree_to_json(t));
                          return json{{"trees", trees}};
                        },
                    },
                    state);
}

Model::State state_from_json(ClassifierKind kind, const json& j) {
  switch (kind) {
    case ClassifierKind::knn:
      return KnnState{matrix_from_json(j.at("points")), j.at("labels").get<std::vector<int>>(), j.at("k").get<int>()};
    case ClassifierKind::gnb:
      return GnbState{matrix_from_json(j.at("means")), matrix_from_json(j.at("variances")),
                      j.at("log_priors").get<std::vector<double>>()};
    case ClassifierKind::tree:
      return tree_from_json(j);
    case ClassifierKind::forest: {
      ForestState s;
      for (const auto& t : j.at("trees")) s.trees.push_back(tree_from_json(t));
      return s;
    }
  }
  throw std::invalid_argument("unknown classifier kind");
}

template <class T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

}  // namespace

json hyperparams_to_json(const Hyperparams& params) {
  return std::visit(Overloaded{
                        [](const KnnParams& p) { return json{{"k", p.k}}; },
                        [](const GnbParams& p) { return json{{"variance_smoothing", p.variance_smoothing}}; },
                        [](const TreeParams& p) {
                          return json{{"max_depth", p.max_depth},
                                      {"min_samples_leaf", p.min_samples_leaf},
                                      {"max_features", p.max_features}};
                        },
                        [](const ForestParams& p) {
                          return json{{"n_trees", p.n_trees},
                                      {"max_depth", p.max_depth},
                                      {"max_features", p.max_features},
                                      {"bootstrap", p.bootstrap}};
                        },
                    },
                    params);
}

Hyperparams hyperparams_from_json(ClassifierKind kind, const json& j) {
  switch (kind) {
    case ClassifierKind::knn: {
      KnnParams p;
      read_if(j, "k", p.k);
      return p;
    }
    case ClassifierKind::gnb: {
      GnbParams p;
      read_if(j, "variance_smoothing", p.variance_smoothing);
      return p;
    }
    case ClassifierKind::tree: {
      TreeParams p;
      read_if(j, "max_depth", p.max_depth);
      read_if(j, "min_samples_leaf", p.min_samples_leaf);
      read_if(j, "max_features", p.max_features);
      return p;
    }
    case ClassifierKind::forest: {
      ForestParams p;
      read_if(j, "n_trees", p.n_trees);
      read_if(j, "max_depth", p.max_depth);
      read_if(j, "max_features", p.max_features);
      read_if(j, "bootstrap", p.bootstrap);
      return p;
    }
  }
  throw std::invalid_argument("unknown classifier kind");
}

json tree_to_json(const DecisionTree& tree) {
  json nodes = json::array();
  for (const auto& n : tree.nodes()) {
    nodes.push_back(json{{"feature", n.feature},
                         {"threshold", n.threshold},
                         {"left", n.left},
                         {"right", n.right},
                         {"counts", n.class_counts}});
  }
  return json{{"feature_count", tree.feature_count()}, {"class_count", tree.class_count()}, {"nodes", nodes}};
}

DecisionTree tree_from_json(const json& j) {
  std::vector<TreeNode> nodes;
  for (const auto& n : j.at("nodes")) {
    TreeNode node;
    node.feature = n.at("feature").get<int>();
    node.threshold = n.at("threshold").get<double>();
    node.left = n.at("left").get<int>();
    node.right = n.at("right").get<int>();
    node.class_counts = n.at("counts").get<std::vector<double>>();
    nodes.push_back(std::move(node));
  }
  return DecisionTree::from_nodes(std::move(nodes), j.at("feature_count").get<std::size_t>(),
                                  j.at("class_count").get<int>());
}

json model_to_json(const ModelBundle& bundle) {
  const Model& m = bundle.model;
  return json{{"format", "rejex-model"},
              {"version", kModelFormatVersion},
              {"kind", std::string(to_string(m.kind()))},
              {"hyperparams", hyperparams_to_json(m.hyperparams())},
              {"feature_count", m.feature_count()},
              {"class_count", m.class_count()},
              {"feature_names", bundle.feature_names},
              {"class_names", bundle.class_names},
              {"label_column", bundle.label_column},
              {"scaler", json{{"means", bundle.scaler.means}, {"stds", bundle.scaler.stds}}},
              {"state", state_to_json(m.state())}};
}

ModelBundle model_from_json(const json& j) {
  if (j.value("format", std::string()) != "rejex-model") {
    throw std::invalid_argument("not a rejex model document");
  }
  const int version = j.at("version").get<int>();
  if (version != kModelFormatVersion) {
    throw std::invalid_argument("unsupported model format version " + std::to_string(version));
  }
  const ClassifierKind kind = parse_classifier_kind(j.at("kind").get<std::string>());
  Hyperparams hp = hyperparams_from_json(kind, j.at("hyperparams"));
  const auto d = j.at("feature_count").get<std::size_t>();
  const int c = j.at("class_count").get<int>();
  ModelBundle bundle{Model(std::move(hp), state_from_json(kind, j.at("state")), d, c), {}, {}, {}, "target"};
  bundle.scaler.means = j.at("scaler").at("means").get<std::vector<double>>();
  bundle.scaler.stds = j.at("scaler").at("stds").get<std::vector<double>>();
  read_if(j, "feature_names", bundle.feature_names);
  read_if(j, "class_names", bundle.class_names);
  read_if(j, "label_column", bundle.label_column);
  if (bundle.scaler.dim() != d || bundle.scaler.stds.size() != d) {
    throw std::invalid_argument("scaler dimension does not match the model");
  }
  return bundle;
}

void save_model(const ModelBundle& bundle, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << model_to_json(bundle).dump() << '\n';
}

ModelBundle load_model(const std::string& path) { return model_from_json(read_json_file(path)); }

json synthetic_spec_to_json(const SyntheticSpec& spec) {
  return json{{"n", spec.n},
              {"d", spec.d},
              {"c", spec.c},
              {"class_weights", spec.class_weights},
              {"relevant_features", spec.relevant_features},
              {"seed", spec.seed},
              {"class_separation", spec.class_separation},
              {"missing_fraction", spec.missing_fraction}};
}

SyntheticSpec synthetic_spec_from_json(const json& j) {
  SyntheticSpec spec;
  if (j.contains("preset")) {
    const auto preset = j.at("preset").get<std::string>();
    if (preset == "flip") {
      spec = flip_like_spec();
    } else if (preset == "t21") {
      spec = t21_like_spec();
    } else {
      throw std::invalid_argument("unknown synthetic preset '" + preset + "'");
    }
  }
  read_if(j, "n", spec.n);
  read_if(j, "d", spec.d);
  read_if(j, "c", spec.c);
  read_if(j, "class_weights", spec.class_weights);
  read_if(j, "relevant_features", spec.relevant_features);
  read_if(j, "seed", spec.seed);
  read_if(j, "class_separation", spec.class_separation);
  read_if(j, "missing_fraction", spec.missing_fraction);
  spec.validate();
  return spec;
}

ExperimentConfig experiment_config_from_json(const json& j, const std::string& base_dir) {
  ExperimentConfig cfg;
  for (const auto& d : j.at("datasets")) {
    DatasetSource src;
    src.name = d.at("name").get<std::string>();
    if (d.contains("synthetic")) {
      src.synthetic = synthetic_spec_from_json(d.at("synthetic"));
    } else {
      std::filesystem::path p = d.at("path").get<std::string>();
      if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
      src.path = p.lexically_normal().string();
    }
    read_if(d, "label_column", src.label_column);
    read_if(d, "missing_token", src.missing_token);
    read_if(d, "max_explained_per_fold", src.max_explained_per_fold);
    cfg.datasets.push_back(std::move(src));
  }
  if (j.contains("classifiers")) {
    cfg.classifiers.clear();
    for (const auto& c : j.at("classifiers")) cfg.classifiers.push_back(parse_classifier_kind(c.get<std::string>()));
  }
  read_if(j, "k_folds", cfg.k_folds);
  read_if(j, "seed", cfg.seed);
  read_if(j, "max_explained_per_fold", cfg.max_explained_per_fold);
  read_if(j, "calibration_fraction", cfg.calibration_fraction);
  read_if(j, "grid_search_max_rows", cfg.grid_search_max_rows);
  read_if(j, "knee_sensitivity", cfg.knee_sensitivity);
  if (j.contains("theta") && !j.at("theta").is_null()) cfg.theta_override = j.at("theta").get<double>();
  if (j.contains("neighborhood")) {
    const auto& n = j.at("neighborhood");
    read_if(n, "n_samples", cfg.explain.neighborhood.n_samples);
    read_if(n, "sigma", cfg.explain.neighborhood.sigma);
    read_if(n, "max_retries", cfg.explain.neighborhood.max_retries);
  }
  if (j.contains("surrogate")) {
    read_if(j.at("surrogate"), "max_depth", cfg.explain.surrogate.max_depth);
    read_if(j.at("surrogate"), "min_samples_leaf", cfg.explain.surrogate.min_samples_leaf);
  }
  if (j.contains("counterfactual")) {
    read_if(j.at("counterfactual"), "delta", cfg.explain.cf.delta);
    read_if(j.at("counterfactual"), "tolerance", cfg.explain.cf.tolerance);
  }
  if (j.contains("perturbation")) {
    read_if(j.at("perturbation"), "feature_fraction", cfg.perturbation.feature_fraction);
    read_if(j.at("perturbation"), "noise_sigma", cfg.perturbation.noise_sigma);
  }
  if (j.contains("grids")) {
    for (const auto& [name, entries] : j.at("grids").items()) {
      const ClassifierKind kind = parse_classifier_kind(name);
      std::vector<Hyperparams> grid;
      for (const auto& e : entries) grid.push_back(hyperparams_from_json(kind, e));
      cfg.grids[kind] = std::move(grid);
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  const auto base = std::filesystem::path(path).parent_path();
  return experiment_config_from_json(read_json_file(path), base.empty() ? "." : base.string());
}

json explanation_to_json(const Explanation& e, std::span<const double> x_orig,
                         const std::vector<std::string>& feature_names, const ScalerParams& scaler,
                         double tolerance) {
  json out{{"mode", std::string(to_string(e.mode))},
           {"sparsity", e.sparsity},
           {"surrogate_consistent", e.surrogate_consistent},
           {"sigma_used", e.sigma_used},
           {"retries", e.retries},
           {"local_fidelity", e.local_fidelity}};
  if (e.mode == ExplanationMode::feat_imp) {
    json fri = json::array();
    for (std::size_t j = 0; j < e.fri.size(); ++j) {
      fri.push_back(json{{"feature", j < feature_names.size() ? feature_names[j] : "f" + std::to_string(j)},
                         {"importance", e.fri[j]}});
    }
    out["fri"] = fri;
  } else {
    json deltas = json::array();
    for (const auto& d : counterfactual_deltas(x_orig, e.x_cf, feature_names, scaler, tolerance)) {
      deltas.push_back(json{{"feature", d.name},
                            {"index", d.feature},
                            {"original", d.original},
                            {"counterfactual", d.updated},
                            {"original_raw", d.original_raw},
                            {"counterfactual_raw", d.updated_raw}});
    }
    out["delta"] = deltas;
    out["x_cf"] = e.x_cf;
    out["x_cf_raw"] = scaler.dim() == e.x_cf.size() ? scaler.inverse(e.x_cf) : e.x_cf;
    out["distance"] = e.cf_distance;
    out["cf_credibility"] = e.cf_credibility;
  }
  return out;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("invalid JSON in '" + path + "': " + e.what());
  }
}

}  // namespace rejex
