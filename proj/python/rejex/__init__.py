# Copyright 2026 The rejex Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Conformal reject option with local explanations of reject."""

from ._rejex import (
    ConformalPredictor,
    Dataset,
    LocallyConstantReject,
    Model,
    accuracy_reject_curve,
    explain_reject,
    fit_classifier,
    impute_mean,
    knee_threshold,
    load_dataset,
    make_synthetic,
    run_command,
    run_experiment,
)

__all__ = [
    "ConformalPredictor",
    "Dataset",
    "LocallyConstantReject",
    "Model",
    "accuracy_reject_curve",
    "explain_reject",
    "fit_classifier",
    "impute_mean",
    "knee_threshold",
    "load_dataset",
    "make_synthetic",
    "run_command",
    "run_experiment",
]
