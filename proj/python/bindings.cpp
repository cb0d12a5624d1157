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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <sstream>

#include "rejex/classifiers.hpp"
#include "rejex/cli.hpp"
#include "rejex/conformal.hpp"
#include "rejex/data.hpp"
#include "rejex/experiments.hpp"
#include "rejex/serialization.hpp"
#include "rejex/surrogate.hpp"

namespace py = pybind11;
using namespace rejex;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2-D array");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  return Matrix(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

std::vector<double> to_vector(const Array& a) {
  if (a.ndim() != 1) throw std::invalid_argument("expected a 1-D array");
  return {a.data(), a.data() + a.shape(0)};
}

Array from_matrix(const Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.values().begin(), m.values().end(), out.mutable_data());
  return out;
}

Array from_vector(const std::vector<double>& v) {
  Array out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

Dataset make_dataset(const Array& x, const std::vector<int>& y, int class_count) {
  Dataset d;
  d.features = to_matrix(x);
  d.labels = y;
  d.class_count = class_count > 0 ? class_count : *std::max_element(y.begin(), y.end()) + 1;
  for (std::size_t j = 0; j < d.dim(); ++j) d.feature_names.push_back("f" + std::to_string(j));
  d.validate();
  return d;
}

Hyperparams params_from_dict(const std::string& kind, const py::dict& params) {
  const auto j = nlohmann::json::parse(py::str(py::module_::import("json").attr("dumps")(params)).cast<std::string>());
  return hyperparams_from_json(parse_classifier_kind(kind), j);
}

py::dict explanation_dict(const Explanation& e) {
  py::dict d;
  d["mode"] = std::string(to_string(e.mode));
  d["sparsity"] = e.sparsity;
  d["surrogate_consistent"] = e.surrogate_consistent;
  d["sigma_used"] = e.sigma_used;
  d["retries"] = e.retries;
  d["local_fidelity"] = e.local_fidelity;
  if (e.mode == ExplanationMode::feat_imp) {
    d["fri"] = from_vector(e.fri);
  } else {
    d["x_cf"] = from_vector(e.x_cf);
    d["distance"] = e.cf_distance;
    d["cf_credibility"] = e.cf_credibility;
  }
  return d;
}

}  // namespace

PYBIND11_MODULE(_rejex, m) {
  m.doc() = "Conformal reject option with local explanations of reject";

  py::register_exception<LocallyConstantReject>(m, "LocallyConstantReject", PyExc_RuntimeError);

  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("features", [](const Dataset& d) { return from_matrix(d.features); })
      .def_readonly("labels", &Dataset::labels)
      .def_readonly("feature_names", &Dataset::feature_names)
      .def_readonly("class_names", &Dataset::class_names)
      .def_readonly("class_count", &Dataset::class_count)
      .def("__len__", &Dataset::size)
      .def_property_readonly("dim", &Dataset::dim);

  m.def("load_dataset", &load_dataset, py::arg("path"), py::arg("label_column") = "target",
        py::arg("missing_token") = "", "Read a CSV with a header row.");
  m.def(
      "make_synthetic",
      [](const std::string& preset, std::optional<std::uint64_t> seed) {
        SyntheticSpec spec = preset == "flip"  ? flip_like_spec()
                             : preset == "t21" ? t21_like_spec()
                                               : throw std::invalid_argument("preset must be 'flip' or 't21'");
        if (seed) spec.seed = *seed;
        return make_synthetic(spec);
      },
      py::arg("preset"), py::arg("seed") = py::none());
  m.def("impute_mean", &impute_mean);

  py::class_<Model, std::shared_ptr<Model>>(m, "Model")
      .def("predict_proba", [](const Model& self, const Array& x) { return from_vector(self.predict_proba(to_vector(x))); })
      .def("predict", [](const Model& self, const Array& x) { return self.predict(to_vector(x)); })
      .def_property_readonly("kind", [](const Model& self) { return std::string(to_string(self.kind())); })
      .def_property_readonly("hyperparams", [](const Model& self) { return describe(self.hyperparams()); })
      .def_property_readonly("feature_count", &Model::feature_count)
      .def_property_readonly("class_count", &Model::class_count);

  m.def(
      "fit_classifier",
      [](const std::string& kind, const Array& x, const std::vector<int>& y, const py::dict& params,
         std::uint64_t seed, int class_count) {
        return std::make_shared<Model>(fit_classifier(params_from_dict(kind, params), make_dataset(x, y, class_count), seed));
      },
      py::arg("kind"), py::arg("x"), py::arg("y"), py::arg("params") = py::dict(), py::arg("seed") = 0,
      py::arg("class_count") = 0, "Fit knn, gnb, tree or forest on standardized features.");

  py::class_<ConformalPredictor>(m, "ConformalPredictor")
      .def_static(
          "calibrate",
          [](std::shared_ptr<Model> model, const Array& x, const std::vector<int>& y) {
            return ConformalPredictor::calibrate(model, make_dataset(x, y, model->class_count()));
          },
          py::arg("model"), py::arg("x"), py::arg("y"))
      .def("p_values", [](const ConformalPredictor& cp, const Array& x) { return from_vector(cp.p_values(to_vector(x))); })
      .def("credibility", [](const ConformalPredictor& cp, const Array& x) { return cp.credibility(to_vector(x)); })
      .def(
          "predict_with_reject",
          [](const ConformalPredictor& cp, const Array& x, double theta) {
            const AugmentedPrediction p = cp.predict_with_reject(to_vector(x), theta);
            py::dict d;
            d["label"] = p.rejected() ? py::object(py::none()) : py::object(py::int_(p.label));
            d["best_label"] = p.best_label;
            d["p_values"] = from_vector(p.p_values);
            d["credibility"] = p.credibility;
            d["confidence"] = p.confidence;
            d["rejected"] = p.rejected();
            return d;
          },
          py::arg("x"), py::arg("theta"))
      .def_property_readonly("scores", [](const ConformalPredictor& cp) {
        return std::vector<double>(cp.scores().begin(), cp.scores().end());
      });

  m.def(
      "accuracy_reject_curve",
      [](const ConformalPredictor& cp, const Array& x, const std::vector<int>& y) {
        std::vector<py::tuple> out;
        for (const auto& p : accuracy_reject_curve(cp, make_dataset(x, y, cp.class_count()))) {
          out.push_back(py::make_tuple(p.theta, p.rejection_rate,
                                       p.accepted_accuracy ? py::object(py::float_(*p.accepted_accuracy))
                                                           : py::object(py::none())));
        }
        return out;
      },
      py::arg("cp"), py::arg("x"), py::arg("y"), "List of (theta, rejection_rate, accepted_accuracy).");
  m.def(
      "knee_threshold",
      [](const std::vector<std::tuple<double, double, std::optional<double>>>& curve, double sensitivity) {
        ARCurve c;
        for (const auto& [t, r, a] : curve) c.push_back({t, r, a});
        const KneeResult k = knee_threshold(c, sensitivity);
        py::dict d;
        d["theta"] = k.theta;
        d["rejection_rate"] = k.rejection_rate;
        d["accepted_accuracy"] = k.accepted_accuracy;
        d["fallback"] = k.fallback;
        return d;
      },
      py::arg("curve"), py::arg("sensitivity") = 1.0);

  m.def(
      "explain_reject",
      [](const ConformalPredictor& cp, double theta, const Array& x, const std::string& mode, std::uint64_t seed,
         int n_samples, double sigma) {
        ExplainOptions options;
        options.neighborhood.n_samples = n_samples;
        options.neighborhood.sigma = sigma;
        return explanation_dict(explain_reject(cp, theta, to_vector(x), parse_explanation_mode(mode), options, seed));
      },
      py::arg("cp"), py::arg("theta"), py::arg("x"), py::arg("mode") = "featimp", py::arg("seed") = 0,
      py::arg("n_samples") = 500, py::arg("sigma") = 0.5);

  m.def(
      "run_experiment",
      [](const std::string& config_path, const std::string& table, std::size_t workers) {
        const ExperimentConfig cfg = load_experiment_config(config_path);
        py::gil_scoped_release release;
        const ResultTable t = table == "table1"   ? run_algorithmic_experiment(cfg, {workers, {}})
                              : table == "table2" ? run_groundtruth_experiment(cfg, {workers, {}})
                                                  : throw std::invalid_argument("table must be 'table1' or 'table2'");
        return to_csv(t);
      },
      py::arg("config_path"), py::arg("table") = "table1", py::arg("workers") = 1, "Returns the result CSV text.");

  m.def(
      "run_command",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run_command(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run a CLI subcommand; returns (exit_code, stdout, stderr).");
}
