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

#include "rejex/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "rejex/random.hpp"

namespace rejex {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string unquote(std::string s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
      cell.push_back(ch);
    } else if (ch == ',' && !quoted) {
      cells.push_back(unquote(trim(cell)));
      cell.clear();
    } else {
      cell.push_back(ch);
    }
  }
  cells.push_back(unquote(trim(cell)));
  return cells;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

bool Dataset::has_missing() const {
  return std::any_of(features.values().begin(), features.values().end(),
                     [](double v) { return std::isnan(v); });
}

void Dataset::validate() const {
  if (size() == 0 || dim() == 0) {
    throw std::invalid_argument("dataset must have n >= 1 and d >= 1");
  }
  if (labels.size() != size()) {
    throw std::invalid_argument("label count does not match row count");
  }
  if (feature_names.size() != dim()) {
    throw std::invalid_argument("feature name count does not match d");
  }
  for (int y : labels) {
    if (y < 0 || y >= class_count) {
      throw std::invalid_argument("label outside [0, class_count)");
    }
  }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.features = features.select_rows(rows);
  out.labels.reserve(rows.size());
  for (std::size_t r : rows) out.labels.push_back(labels.at(r));
  out.feature_names = feature_names;
  out.class_count = class_count;
  out.class_names = class_names;
  return out;
}

std::vector<double> ScalerParams::transform(std::span<const double> x) const {
  if (x.size() != means.size()) {
    throw std::invalid_argument("scaler: dimension mismatch");
  }
  std::vector<double> z(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    z[j] = stds[j] > 0.0 ? (x[j] - means[j]) / stds[j] : 0.0;
  }
  return z;
}

std::vector<double> ScalerParams::inverse(std::span<const double> z) const {
  if (z.size() != means.size()) {
    throw std::invalid_argument("scaler: dimension mismatch");
  }
  std::vector<double> x(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) x[j] = z[j] * stds[j] + means[j];
  return x;
}

void SyntheticSpec::validate() const {
  if (n == 0 || d == 0) throw std::invalid_argument("synthetic spec: n and d must be positive");
  if (c < 2) throw std::invalid_argument("synthetic spec: need at least two classes");
  if (class_weights.size() != static_cast<std::size_t>(c)) {
    throw std::invalid_argument("synthetic spec: class_weights must have c entries");
  }
  double total = 0.0;
  for (double w : class_weights) {
    if (w < 0.0) throw std::invalid_argument("synthetic spec: negative class weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("synthetic spec: class_weights must sum to 1");
  }
  for (std::size_t j : relevant_features) {
    if (j >= d) throw std::invalid_argument("synthetic spec: relevant feature out of range");
  }
  if (missing_fraction < 0.0 || missing_fraction >= 1.0) {
    throw std::invalid_argument("synthetic spec: missing_fraction must be in [0, 1)");
  }
}

SyntheticSpec flip_like_spec(std::uint64_t seed) {
  SyntheticSpec s;
  s.n = 118;
  s.d = 12;
  s.c = 2;
  s.class_weights = {0.7, 0.3};
  s.relevant_features = {0, 3, 5, 8};
  s.class_separation = 1.2;
  s.missing_fraction = 0.02;
  s.seed = seed;
  return s;
}

SyntheticSpec t21_like_spec(std::uint64_t seed) {
  SyntheticSpec s;
  s.n = 50000;
  s.d = 18;
  s.c = 2;
  s.class_weights = {0.992, 0.008};
  s.relevant_features = {0, 1, 2, 3, 4, 5};
  s.class_separation = 1.5;
  s.seed = seed;
  return s;
}

Dataset load_dataset(const std::string& path, const std::string& label_column,
                     const std::string& missing_token) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("dataset file '" + path + "' is empty");
  }
  const std::vector<std::string> header = split_csv_line(line);
  const auto label_it = std::find(header.begin(), header.end(), label_column);
  if (label_it == header.end()) {
    throw std::runtime_error("label column '" + label_column + "' not found in '" + path + "'");
  }
  const std::size_t label_pos = static_cast<std::size_t>(label_it - header.begin());
  const std::string missing = trim(missing_token);

  Dataset data;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j != label_pos) data.feature_names.push_back(header[j]);
  }

  std::vector<std::string> raw_labels;
  std::vector<double> row(data.feature_names.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw std::runtime_error("inconsistent row width at line " + std::to_string(line_no) +
                               " of '" + path + "'");
    }
    std::size_t k = 0;
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (j == label_pos) continue;
      double v = 0.0;
      if (cells[j] == missing) {
        v = kMissing;
      } else if (!parse_double(cells[j], v)) {
        throw std::runtime_error("non-numeric feature cell '" + cells[j] + "' at line " +
                                 std::to_string(line_no) + ", column '" + header[j] + "'");
      }
      row[k++] = v;
    }
    data.features.append_row(row);
    raw_labels.push_back(cells[label_pos]);
  }
  if (raw_labels.empty()) throw std::runtime_error("dataset file '" + path + "' has no rows");
  if (data.features.cols() == 0) {
    throw std::runtime_error("dataset file '" + path + "' has no feature columns");
  }

  std::vector<std::string> distinct = raw_labels;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  const bool numeric = std::all_of(distinct.begin(), distinct.end(), [](const std::string& s) {
    double v;
    return parse_double(s, v);
  });
  if (numeric) {
    std::stable_sort(distinct.begin(), distinct.end(), [](const std::string& a, const std::string& b) {
      double va = 0, vb = 0;
      parse_double(a, va);
      parse_double(b, vb);
      return va < vb;
    });
  }
  std::map<std::string, int> ids;
  for (std::size_t i = 0; i < distinct.size(); ++i) ids[distinct[i]] = static_cast<int>(i);
  data.labels.reserve(raw_labels.size());
  for (const auto& s : raw_labels) data.labels.push_back(ids.at(s));
  data.class_count = static_cast<int>(distinct.size());
  data.class_names = distinct;
  return data;
}

void write_dataset_csv(const Dataset& data, const std::string& path,
                       const std::string& label_column) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  for (const auto& name : data.feature_names) out << name << ',';
  out << label_column << '\n';
  out << std::setprecision(17);
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.features.row(i)) {
      if (!std::isnan(v)) out << v;
      out << ',';
    }
    const auto label = static_cast<std::size_t>(data.labels[i]);
    if (label < data.class_names.size()) {
      out << data.class_names[label] << '\n';
    } else {
      out << data.labels[i] << '\n';
    }
  }
}

Dataset impute_mean(const Dataset& data) {
  Dataset out = data;
  for (std::size_t j = 0; j < data.dim(); ++j) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double v = data.features(i, j);
      if (!std::isnan(v)) {
        sum += v;
        ++count;
      }
    }
    if (count == data.size()) continue;
    if (count == 0) {
      const std::string name = j < data.feature_names.size() ? data.feature_names[j]
                                                             : std::to_string(j);
      throw std::invalid_argument("column '" + name + "' has no non-missing values");
    }
    const double mean = sum / static_cast<double>(count);
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (std::isnan(out.features(i, j))) out.features(i, j) = mean;
    }
  }
  return out;
}

ScalerParams fit_scaler(const Matrix& reference) {
  if (reference.rows() == 0) throw std::invalid_argument("cannot fit scaler on empty data");
  const std::size_t d = reference.cols();
  const double n = static_cast<double>(reference.rows());
  ScalerParams p;
  p.means.assign(d, 0.0);
  p.stds.assign(d, 0.0);
  for (std::size_t i = 0; i < reference.rows(); ++i) {
    for (std::size_t j = 0; j < d; ++j) p.means[j] += reference(i, j);
  }
  for (double& m : p.means) m /= n;
  for (std::size_t i = 0; i < reference.rows(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double delta = reference(i, j) - p.means[j];
      p.stds[j] += delta * delta;
    }
  }
  for (double& s : p.stds) s = std::sqrt(s / n);
  return p;
}

Dataset apply_scaler(const ScalerParams& params, const Dataset& data) {
  if (data.dim() != params.dim()) {
    throw std::invalid_argument("standardize: dimension mismatch");
  }
  Dataset out = data;
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto r = out.features.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) {
      r[j] = params.stds[j] > 0.0 ? (r[j] - params.means[j]) / params.stds[j] : 0.0;
    }
  }
  return out;
}

std::pair<ScalerParams, std::vector<Dataset>> standardize(
    const Dataset& reference, const std::vector<Dataset>& targets) {
  if (reference.has_missing()) {
    throw std::invalid_argument("standardize: reference has missing values");
  }
  ScalerParams params = fit_scaler(reference.features);
  std::vector<Dataset> out;
  out.reserve(targets.size());
  for (const auto& t : targets) out.push_back(apply_scaler(params, t));
  return {std::move(params), std::move(out)};
}

FoldAssignment kfold_split(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2 || k > n) {
    throw std::invalid_argument("kfold_split requires 2 <= k <= n");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  FoldAssignment folds(k);
  for (std::size_t p = 0; p < n; ++p) folds[p % k].push_back(order[p]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

FoldAssignment stratified_kfold_split(std::span<const int> labels, int class_count,
                                      std::size_t k, std::uint64_t seed) {
  const std::size_t n = labels.size();
  if (k < 2 || k > n) {
    throw std::invalid_argument("kfold_split requires 2 <= k <= n");
  }
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(class_count));
  for (std::size_t i = 0; i < n; ++i) {
    by_class.at(static_cast<std::size_t>(labels[i])).push_back(i);
  }
  const bool stratify = std::all_of(by_class.begin(), by_class.end(),
                                    [k](const auto& rows) { return rows.size() >= k; });
  if (!stratify) return kfold_split(n, k, seed);

  Rng rng(seed);
  FoldAssignment folds(k);
  // Dealing continues across classes, so fold sizes stay within one of each
  // other overall and per class.
  std::size_t position = 0;
  for (auto& rows : by_class) {
    std::shuffle(rows.begin(), rows.end(), rng);
    for (std::size_t r : rows) folds[position++ % k].push_back(r);
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(
    std::span<const int> labels, std::span<const std::size_t> rows, double fraction,
    std::uint64_t seed) {
  if (fraction < 0.0 || fraction >= 1.0) {
    throw std::invalid_argument("holdout fraction must be in [0, 1)");
  }
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t r : rows) by_class[labels[r]].push_back(r);
  Rng rng(seed);
  std::vector<std::size_t> first, second;
  for (auto& [label, members] : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    auto take = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(members.size())));
    take = std::min(take, members.size() - 1);
    second.insert(second.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
    first.insert(first.end(), members.begin() + static_cast<std::ptrdiff_t>(take), members.end());
  }
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  return {std::move(first), std::move(second)};
}

Dataset make_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);

  // Largest-remainder apportionment: class sizes match the weights exactly
  // up to rounding, independent of the seed.
  const std::size_t c = static_cast<std::size_t>(spec.c);
  std::vector<std::size_t> counts(c);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < c; ++k) {
    const double exact = spec.class_weights[k] * static_cast<double>(spec.n);
    counts[k] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[k];
    remainders.emplace_back(exact - std::floor(exact), k);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < spec.n; ++i, ++assigned) ++counts[remainders[i % c].second];

  std::vector<int> labels;
  labels.reserve(spec.n);
  for (std::size_t k = 0; k < c; ++k) labels.insert(labels.end(), counts[k], static_cast<int>(k));
  std::shuffle(labels.begin(), labels.end(), rng);

  std::vector<double> direction(spec.d, 0.0);
  for (std::size_t i = 0; i < spec.relevant_features.size(); ++i) {
    direction[spec.relevant_features[i]] = (i % 2 == 0) ? 1.0 : -1.0;
  }

  Dataset data;
  data.features = Matrix(spec.n, spec.d);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const double shift = spec.class_separation * static_cast<double>(labels[i]);
    for (std::size_t j = 0; j < spec.d; ++j) {
      data.features(i, j) = direction[j] * shift + noise(rng);
    }
  }
  if (spec.missing_fraction > 0.0) {
    std::bernoulli_distribution blank(spec.missing_fraction);
    // Row 0 is never blanked so every column keeps an observed value.
    for (std::size_t i = 1; i < spec.n; ++i) {
      for (std::size_t j = 0; j < spec.d; ++j) {
        if (blank(rng)) data.features(i, j) = kMissing;
      }
    }
  }
  data.labels = std::move(labels);
  data.class_count = spec.c;
  for (std::size_t j = 0; j < spec.d; ++j) data.feature_names.push_back("f" + std::to_string(j));
  for (int k = 0; k < spec.c; ++k) data.class_names.push_back(std::to_string(k));
  return data;
}

}  // namespace rejex
