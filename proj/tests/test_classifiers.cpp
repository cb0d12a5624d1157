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
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "rejex/classifiers.hpp"
#include "rejex/data.hpp"

using namespace rejex;

namespace {

Dataset make_dataset(Matrix x, std::vector<int> y, int c) {
  Dataset d;
  d.features = std::move(x);
  d.labels = std::move(y);
  d.class_count = c;
  for (std::size_t j = 0; j < d.features.cols(); ++j) d.feature_names.push_back("f" + std::to_string(j));
  return d;
}

// Two 1-D Gaussian blobs at -mu and +mu with unit std.
Dataset blobs(std::size_t n, double mu, double label_noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::bernoulli_distribution flip(label_noise);
  Matrix x(n, 1);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    x(i, 0) = (label == 0 ? -mu : mu) + noise(rng);
    y[i] = flip(rng) ? 1 - label : label;
  }
  return make_dataset(std::move(x), std::move(y), 2);
}

}  // namespace

TEST_CASE("gini impurity") {
  CHECK(gini(std::vector<double>{5, 5}) == doctest::Approx(0.5));
  CHECK(gini(std::vector<double>{4, 0}) == 0.0);
  CHECK(gini(std::vector<double>{0, 0}) == 0.0);
}

TEST_CASE("kNN") {
  SUBCASE("vote fractions") {
    Matrix x(3, 1, std::vector<double>{0.0, 1.0, 2.0});
    const Model m = fit_classifier(KnnParams{3}, make_dataset(x, {1, 1, 0}, 2), 0);
    const auto p = m.predict_proba(std::vector<double>{0.5});
    CHECK(p[0] == doctest::Approx(1.0 / 3.0));
    CHECK(p[1] == doctest::Approx(2.0 / 3.0));
  }
  SUBCASE("k = 1 memorizes distinct training points") {
    const Dataset train = blobs(60, 1.0, 0.2, 5);
    const Model m = fit_classifier(KnnParams{1}, train, 0);
    CHECK(accuracy(m, train) == 1.0);
  }
  SUBCASE("probabilities are multiples of 1/k") {
    const Dataset train = blobs(80, 0.5, 0.0, 6);
    const Model m = fit_classifier(KnnParams{5}, train, 0);
    for (double q = -3.0; q <= 3.0; q += 0.37) {
      for (double v : m.predict_proba(std::vector<double>{q})) {
        CHECK(std::abs(v * 5.0 - std::round(v * 5.0)) < 1e-12);
      }
    }
  }
  CHECK_THROWS(validate(KnnParams{4}));
  CHECK_THROWS(validate(KnnParams{0}));
}

TEST_CASE("Gaussian naive Bayes") {
  SUBCASE("well separated blobs") {
    const Dataset train = blobs(200, 5.0, 0.0, 11);
    const Dataset test = blobs(200, 5.0, 0.0, 12);
    const Model m = fit_classifier(GnbParams{}, train, 0);
    CHECK(accuracy(m, test) >= 0.99);
  }
  SUBCASE("symmetric classes give (0.5, 0.5) at the midpoint") {
    Matrix x(4, 1, std::vector<double>{-3.0, -1.0, 1.0, 3.0});
    const Model m = fit_classifier(GnbParams{}, make_dataset(x, {0, 0, 1, 1}, 2), 0);
    const auto p = m.predict_proba(std::vector<double>{0.0});
    CHECK(p[0] == doctest::Approx(0.5));
    CHECK(p[1] == doctest::Approx(0.5));
  }
  SUBCASE("variances never drop below the smoothing term") {
    Matrix x(4, 2, std::vector<double>{1, 0, 1, 0, 2, 0, 2, 0});
    const Model m = fit_classifier(GnbParams{1e-3}, make_dataset(x, {0, 0, 1, 1}, 2), 0);
    const auto& state = std::get<GnbState>(m.state());
    for (double v : state.variances.values()) CHECK(v >= 1e-3);
    const auto p = m.predict_proba(std::vector<double>{1.0, 0.0});
    CHECK(std::isfinite(p[0]));
    CHECK(p[0] > 0.99);
  }
}

TEST_CASE("decision tree") {
  SUBCASE("fits consistent data exactly") {
    const Dataset d = blobs(100, 0.3, 0.3, 3);
    const DecisionTree t = DecisionTree::fit(d.features, d.labels, 2, TreeParams{});
    std::size_t correct = 0;
    for (std::size_t i = 0; i < d.size(); ++i) correct += t.predict(d.features.row(i)) == d.labels[i];
    CHECK(correct == d.size());
  }
  SUBCASE("every split strictly decreases weighted Gini") {
    const Dataset d = blobs(150, 0.8, 0.1, 4);
    const DecisionTree t = DecisionTree::fit(d.features, d.labels, 2, TreeParams{4, 3, 0});
    for (const auto& n : t.nodes()) {
      if (n.is_leaf()) {
        CHECK(n.sample_count() >= 3.0);
        continue;
      }
      const auto& l = t.nodes()[static_cast<std::size_t>(n.left)];
      const auto& r = t.nodes()[static_cast<std::size_t>(n.right)];
      const double child =
          (l.sample_count() * gini(l.class_counts) + r.sample_count() * gini(r.class_counts)) / n.sample_count();
      CHECK(child < gini(n.class_counts));
    }
    CHECK(t.depth() <= 4);
  }
  SUBCASE("leaf majority ties go to the lower class") {
    TreeNode leaf;
    leaf.class_counts = {2.0, 2.0};
    CHECK(leaf.majority_class() == 0);
  }
  SUBCASE("from_nodes validates links") {
    std::vector<TreeNode> bad(1);
    bad[0].feature = 0;
    bad[0].left = 0;
    bad[0].right = 0;
    bad[0].class_counts = {1, 1};
    CHECK_THROWS(DecisionTree::from_nodes(bad, 1, 2));
  }
}

TEST_CASE("random forest") {
  const Dataset d = blobs(120, 0.4, 0.25, 8);
  SUBCASE("single unbounded tree without subsampling fits the training data") {
    const Model m = fit_classifier(ForestParams{1, 0, static_cast<int>(d.dim()), false}, d, 1);
    CHECK(accuracy(m, d) == 1.0);
    const auto& forest = std::get<ForestState>(m.state());
    REQUIRE(forest.trees.size() == 1);
    for (double q = -2.0; q <= 2.0; q += 0.25) {
      const std::vector<double> x{q};
      CHECK(m.predict_proba(x) == forest.trees[0].predict_proba(x));
    }
  }
  SUBCASE("probability is the mean of member trees") {
    const Model m = fit_classifier(ForestParams{7, 3, 0, true}, d, 2);
    const auto& forest = std::get<ForestState>(m.state());
    const std::vector<double> x{0.1};
    std::vector<double> mean(2, 0.0);
    for (const auto& t : forest.trees) {
      const auto p = t.predict_proba(x);
      for (std::size_t k = 0; k < 2; ++k) mean[k] += p[k] / 7.0;
    }
    const auto p = m.predict_proba(x);
    CHECK(p[0] == doctest::Approx(mean[0]));
    CHECK(p[1] == doctest::Approx(mean[1]));
  }
}

TEST_CASE("probabilities sum to one for every model") {
  const Dataset d = blobs(90, 1.0, 0.1, 21);
  for (const Hyperparams& hp :
       std::vector<Hyperparams>{KnnParams{3}, GnbParams{}, TreeParams{3, 1, 0}, ForestParams{5, 3, 0, true}}) {
    const Model m = fit_classifier(hp, d, 4);
    for (double q = -4.0; q <= 4.0; q += 0.5) {
      const auto p = m.predict_proba(std::vector<double>{q});
      CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("fit_classifier needs every class") {
  Matrix x(2, 1, std::vector<double>{0.0, 1.0});
  CHECK_THROWS_WITH(fit_classifier(GnbParams{}, make_dataset(x, {0, 0}, 2), 0), doctest::Contains("absent"));
}

TEST_CASE("grid search") {
  const Dataset noisy = blobs(300, 1.0, 0.1, 33);
  SUBCASE("singleton grid") {
    const Hyperparams only = KnnParams{7};
    CHECK(std::get<KnnParams>(grid_search({only}, noisy, 1)).k == 7);
  }
  SUBCASE("large k wins under label noise") {
    const Hyperparams best = grid_search({KnnParams{1}, KnnParams{9}}, noisy, 1);
    CHECK(std::get<KnnParams>(best).k == 9);
    CHECK(std::get<KnnParams>(grid_search({KnnParams{1}, KnnParams{9}}, noisy, 1)).k == 9);
  }
  SUBCASE("duplicating a losing entry does not change the winner") {
    const Hyperparams a = grid_search({KnnParams{1}, KnnParams{9}, KnnParams{3}}, noisy, 2);
    const Hyperparams b = grid_search({KnnParams{1}, KnnParams{1}, KnnParams{9}, KnnParams{3}}, noisy, 2);
    CHECK(a == b);
  }
}

TEST_CASE("classifier names") {
  CHECK(parse_classifier_kind("knn") == ClassifierKind::knn);
  CHECK(parse_classifier_kind("random_forest") == ClassifierKind::forest);
  CHECK_THROWS(parse_classifier_kind("svm"));
  CHECK(argmax(std::vector<double>{0.4, 0.4, 0.2}) == 0);
}
