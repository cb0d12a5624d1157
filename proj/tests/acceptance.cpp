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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.
//
//   rejex_acceptance <config.json> <scratch-dir>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rejex/cli.hpp"
#include "rejex/conformal.hpp"
#include "rejex/counterfactual.hpp"
#include "rejex/data.hpp"

namespace fs = std::filesystem;
using namespace rejex;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

void report(int id, const std::string& title, const Verdict& v) {
  std::printf("[%s] criterion %d: %s -- %s\n", v.pass ? "PASS" : "FAIL", id, title.c_str(), v.detail.c_str());
  std::fflush(stdout);
  if (!v.pass) ++g_failures;
}

std::string fmt(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// (classifier, dataset) -> metric -> mean
using TableMeans = std::map<std::pair<std::string, std::string>, std::map<std::string, double>>;

TableMeans parse_table_csv(const fs::path& path) {
  TableMeans out;
  std::istringstream in(slurp(path));
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 4 || cells[2] == "no_rejects_observed" || cells[3].empty()) continue;
    out[{cells[0], cells[1]}][cells[2]] = std::stod(cells[3]);
  }
  return out;
}

std::optional<double> lookup(const TableMeans& t, const std::string& clf, const std::string& ds,
                             const std::string& metric) {
  const auto it = t.find({clf, ds});
  if (it == t.end()) return std::nullopt;
  const auto m = it->second.find(metric);
  if (m == it->second.end()) return std::nullopt;
  return m->second;
}

int run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_command(args, out, err);
  if (code != 0) std::fprintf(stderr, "%s", err.str().c_str());
  return code;
}

Verdict conformal_hand_cases() {
  const double a = nonconformity(std::vector<double>{0.7, 0.3}, 0);
  const double p = p_value(std::vector<double>{-0.4, 0.0, 0.2}, 0.1);
  // -0.4 is not exactly representable; compare against the same double arithmetic.
  const bool pass = a == 0.3 - 0.7 && p == 0.25;
  return {pass, "phi = " + fmt(a, 17) + ", p = " + fmt(p, 17)};
}

Verdict conformal_validity() {
  SyntheticSpec spec{3500, 4, 2, {0.5, 0.5}, {0, 1}, 1234, 1.0, 0.0};
  const Dataset all = make_synthetic(spec);
  std::vector<std::size_t> fit_rows, calib_rows, test_rows;
  for (std::size_t i = 0; i < all.size(); ++i) {
    (i < 1000 ? fit_rows : i < 1500 ? calib_rows : test_rows).push_back(i);
  }
  auto model = std::make_shared<Model>(fit_classifier(GnbParams{}, all.subset(fit_rows), 1));
  const auto cp = ConformalPredictor::calibrate(model, all.subset(calib_rows));
  const Dataset test = all.subset(test_rows);
  bool pass = true;
  std::string detail;
  for (double eps : {0.05, 0.1, 0.2}) {
    std::size_t below = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
      below += cp.p_values(test.features.row(i))[static_cast<std::size_t>(test.labels[i])] < eps;
    }
    const double rate = static_cast<double>(below) / static_cast<double>(test.size());
    pass = pass && rate <= eps + 0.05;
    detail += "eps " + fmt(eps, 2) + ": " + fmt(rate) + " (limit " + fmt(eps + 0.05, 2) + ")  ";
  }
  return {pass, detail + "n_calib 500, n_test 2000"};
}

Verdict counterfactual_oracle() {
  constexpr double kStep = 0.01;
  std::mt19937_64 rng(8080);
  std::uniform_int_distribution<int> cell(-300, 300);
  std::uniform_int_distribution<int> dims(1, 3);
  int constraint_ok = 0;
  int distance_ok = 0;
  int cases = 0;
  double worst_gap = 0.0;
  while (cases < 100) {
    const auto d = static_cast<std::size_t>(dims(rng));
    const DecisionTree tree = oracle::random_grid_tree(rng, d, 4, 2, kStep, 2.5);
    if (leaf_regions(tree, 0).empty()) continue;
    std::vector<double> x(d);
    for (double& v : x) v = cell(rng) * kStep;
    ++cases;
    const Counterfactual cf = closest_counterfactual(tree, x, 0);
    const auto grid = oracle::brute_force_counterfactual(tree, x, 0, kStep);
    if (tree.predict(cf.point) == 0) ++constraint_ok;
    if (!grid) continue;
    const double gap = std::abs(cf.distance - grid->distance);
    worst_gap = std::max(worst_gap, gap);
    if (gap <= kStep + 1e-9) ++distance_ok;
  }
  return {constraint_ok == 100 && distance_ok == 100,
          "class constraint " + std::to_string(constraint_ok) + "/100, within one grid step " +
              std::to_string(distance_ok) + "/100, worst |L1 gap| " + fmt(worst_gap, 4)};
}

Verdict kneedle_sqrt() {
  ARCurve curve;
  for (int i = 0; i <= 20; ++i) curve.push_back({i * 0.05, i * 0.05, std::sqrt(i * 0.05)});
  const KneeResult k = knee_threshold(curve);
  return {!k.fallback && std::abs(k.rejection_rate - 0.25) <= 0.05 + 1e-12,
          "knee at x = " + fmt(k.rejection_rate) + " (target 0.25 +- 0.05)"};
}

const std::vector<std::string> kClassifiers{"kNN", "GNB", "RandomForest"};
const std::vector<std::string> kRealData{"Wine", "BreastCancer"};

Verdict table1_accuracy(const TableMeans& t) {
  const std::map<std::pair<std::string, std::string>, double> reference{
      {{"kNN", "Wine"}, 0.80},         {{"kNN", "BreastCancer"}, 0.92},
      {{"GNB", "Wine"}, 0.92},         {{"GNB", "BreastCancer"}, 0.88},
      {{"RandomForest", "Wine"}, 0.80}, {{"RandomForest", "BreastCancer"}, 1.00}};
  bool pass = true;
  std::string detail;
  for (const auto& [key, ref] : reference) {
    const auto got = lookup(t, key.first, key.second, "accuracy");
    const bool ok = got && std::abs(*got - ref) <= 0.15 + 1e-12;
    pass = pass && ok;
    detail += key.first + "/" + key.second + " " + (got ? fmt(*got, 2) : std::string("n/a")) + " vs " +
              fmt(ref, 2) + (ok ? "" : " (!)") + "; ";
  }
  return {pass, detail};
}

Verdict table1_sparsity(const TableMeans& t) {
  int exceptions = 0;
  bool in_range = true;
  std::string detail;
  for (const auto& ds : kRealData) {
    for (const auto& clf : kClassifiers) {
      const auto fi = lookup(t, clf, ds, "featimp_sparsity");
      const auto cf = lookup(t, clf, ds, "cf_sparsity");
      if (!fi || !cf) {
        ++exceptions;
        detail += clf + "/" + ds + " missing; ";
        continue;
      }
      if (*cf > *fi) ++exceptions;
      const bool range_ok = *cf >= 0.5 && *cf <= 2.0;
      in_range = in_range && range_ok;
      detail += clf + "/" + ds + " cf " + fmt(*cf, 2) + (range_ok ? "" : " (!)") + " <= fi " + fmt(*fi, 2) + "; ";
    }
  }
  return {exceptions <= 1 && in_range, "ordering exceptions " + std::to_string(exceptions) + "/1 allowed; " + detail};
}

Verdict table2_recall(const TableMeans& t) {
  int ordered = 0;
  bool in_range = true;
  std::string detail;
  for (const auto& ds : kRealData) {
    for (const auto& clf : kClassifiers) {
      const auto fi = lookup(t, clf, ds, "featimp_recall");
      const auto cf = lookup(t, clf, ds, "cf_recall");
      if (!fi || !cf) {
        in_range = false;
        detail += clf + "/" + ds + " missing; ";
        continue;
      }
      if (*fi >= *cf) ++ordered;
      in_range = in_range && *fi > 0.0 && *fi <= 1.0 && *cf > 0.0 && *cf <= 1.0;
      detail += clf + "/" + ds + " fi " + fmt(*fi, 2) + " cf " + fmt(*cf, 2) + "; ";
    }
  }
  return {ordered >= 5 && in_range, "FeatImp >= Cf in " + std::to_string(ordered) + "/6; " + detail};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::fprintf(stderr, "usage: %s <config.json> <scratch-dir>\n", argv[0]);
    return 2;
  }
  const std::string config = argv[1];
  const fs::path scratch = argv[2];
  fs::remove_all(scratch);
  fs::create_directories(scratch);

  report(1, "conformal hand cases", conformal_hand_cases());
  report(2, "conformal validity", conformal_validity());
  report(3, "counterfactual vs grid oracle", counterfactual_oracle());
  report(4, "kneedle on sqrt(x)", kneedle_sqrt());

  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  const int t1_code = run_cli({"run-table1", "--config", config, "--out", (scratch / "w1").string(), "--workers", "1"});
  const auto t1 = Clock::now();
  const int t2_code = run_cli({"run-table2", "--config", config, "--out", (scratch / "w1").string(), "--workers", "1"});
  const auto t2 = Clock::now();
  const double suite_seconds = std::chrono::duration<double>(t2 - t0).count();
  const double table1_seconds = std::chrono::duration<double>(t1 - t0).count();

  const TableMeans table1 = t1_code == 0 ? parse_table_csv(scratch / "w1" / "table1.csv") : TableMeans{};
  const TableMeans table2 = t2_code == 0 ? parse_table_csv(scratch / "w1" / "table2.csv") : TableMeans{};
  report(5, "Table 1 surrogate accuracy vs published reference (+-0.15)",
         t1_code == 0 ? table1_accuracy(table1) : Verdict{false, "run-table1 failed"});
  report(6, "Cf sparser than FeatImp; Cf sparsity in [0.5, 2.0]",
         t1_code == 0 ? table1_sparsity(table1) : Verdict{false, "run-table1 failed"});
  report(7, "Table 2 FeatImp recall >= Cf recall",
         t2_code == 0 ? table2_recall(table2) : Verdict{false, "run-table2 failed"});

  const int t1b_code = run_cli({"run-table1", "--config", config, "--out", (scratch / "w4").string(), "--workers", "4"});
  const bool identical = t1_code == 0 && t1b_code == 0 &&
                         slurp(scratch / "w1" / "table1.csv") == slurp(scratch / "w4" / "table1.csv");
  report(8, "determinism across worker counts",
         {identical, identical ? "table1.csv byte-identical for --workers 1 and 4" : "outputs differ"});

  report(9, "desk-scale runtime (< 600 s, single worker)",
         {t1_code == 0 && t2_code == 0 && suite_seconds < 600.0,
          "Table 1 " + fmt(table1_seconds, 1) + " s + Table 2 " + fmt(suite_seconds - table1_seconds, 1) +
              " s = " + fmt(suite_seconds, 1) + " s"});

  std::printf("%d criterion(s) failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
