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

#ifndef REJEX_SERIALIZATION_HPP_
#define REJEX_SERIALIZATION_HPP_

#include <string>
#include <vector>

#include "json.hpp"
#include "rejex/classifiers.hpp"
#include "rejex/data.hpp"
#include "rejex/experiments.hpp"
#include "rejex/surrogate.hpp"

namespace rejex {

inline constexpr int kModelFormatVersion = 1;

/// A fitted model plus what is needed to use it on raw inputs.
struct ModelBundle {
  Model model;
  ScalerParams scaler;
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;
  std::string label_column = "target";
};

nlohmann::json hyperparams_to_json(const Hyperparams& params);
Hyperparams hyperparams_from_json(ClassifierKind kind, const nlohmann::json& j);

nlohmann::json tree_to_json(const DecisionTree& tree);
DecisionTree tree_from_json(const nlohmann::json& j);

nlohmann::json model_to_json(const ModelBundle& bundle);
ModelBundle model_from_json(const nlohmann::json& j);
void save_model(const ModelBundle& bundle, const std::string& path);
ModelBundle load_model(const std::string& path);

nlohmann::json synthetic_spec_to_json(const SyntheticSpec& spec);
/// Accepts either the full field set or {"preset": "flip" | "t21", "seed": ...}.
SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j);

/// Relative dataset paths are resolved against base_dir.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const std::string& base_dir = ".");
ExperimentConfig load_experiment_config(const std::string& path);

nlohmann::json explanation_to_json(const Explanation& e, std::span<const double> x_orig,
                                   const std::vector<std::string>& feature_names, const ScalerParams& scaler,
                                   double tolerance);

nlohmann::json read_json_file(const std::string& path);

}  // namespace rejex

#endif  // REJEX_SERIALIZATION_HPP_
