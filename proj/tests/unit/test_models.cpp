#include <doctest.h>

#include <cmath>

#include "cryptodiv/models.hpp"
#include "cryptodiv/parallel.hpp"
#include "oracles.hpp"

using namespace cryptodiv;

namespace {

struct Problem {
  Matrix x;
  std::vector<double> y;
};

Problem friedman(std::size_t n, std::size_t p, std::uint64_t seed) {
  Rng rng(seed);
  Problem out{Matrix(n, p), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) out.x(i, j) = rng.uniform();
    out.y[i] = 10.0 * std::sin(3.14159 * out.x(i, 0) * out.x(i, 1)) +
               20.0 * (out.x(i, 2) - 0.5) * (out.x(i, 2) - 0.5) + 10.0 * out.x(i, 3) +
               rng.normal();
  }
  return out;
}

EnsembleParams rf(std::size_t trees) {
  EnsembleParams p;
  p.kind = EnsembleKind::RandomForest;
  p.n_estimators = trees;
  p.seed = 3;
  return p;
}

} // namespace

TEST_CASE("an unrestricted tree memorizes distinct rows") {
  const auto prob = friedman(200, 5, 1);
  auto p = rf(1);
  p.bootstrap = false;
  const auto model = fit_ensemble(prob.x, prob.y, p);
  CHECK(mse(prob.y, predict(model, prob.x)) == 0.0);
  CHECK(model.trees[0].leaves() == 200);
}

TEST_CASE("tree structure respects depth and leaf limits") {
  const auto prob = friedman(300, 5, 2);
  auto p = rf(1);
  p.max_depth = 3;
  p.min_samples_leaf = 10;
  Rng rng(1);
  const auto tree = fit_tree(prob.x, prob.y, p, rng);
  CHECK(tree.depth() <= 3);
  CHECK(tree.leaves() <= 8);
  for (const auto& node : tree.nodes) {
    if (node.is_leaf()) CHECK(node.samples >= 10);
  }
  // Rows at or below a threshold go left.
  const auto& root = tree.nodes[0];
  REQUIRE_FALSE(root.is_leaf());
  std::vector<double> row(5, 0.5);
  row[static_cast<std::size_t>(root.feature)] = root.threshold;
  std::vector<double> above = row;
  above[static_cast<std::size_t>(root.feature)] = std::nextafter(root.threshold, 2.0);
  CHECK(tree.predict(row) != tree.predict(above));
}

TEST_CASE("boosting training loss never increases") {
  const auto prob = friedman(300, 6, 4);
  EnsembleParams p;
  p.kind = EnsembleKind::GradientBoost;
  p.n_estimators = 200;
  p.max_depth = 3;
  p.learning_rate = 0.1;
  const auto model = fit_ensemble(prob.x, prob.y, p);
  REQUIRE(model.train_loss.size() == 201);
  for (std::size_t s = 1; s < model.train_loss.size(); ++s) {
    CHECK(model.train_loss[s] <= model.train_loss[s - 1] + 1e-12);
  }
  double mean = 0.0;
  for (double v : prob.y) mean += v;
  CHECK(model.base == doctest::Approx(mean / 300.0));
  const auto staged = predict_staged(model, prob.x, 200);
  CHECK(mse(prob.y, staged) == doctest::Approx(model.train_loss.back()));
  CHECK_THROWS(predict_staged(fit_ensemble(prob.x, prob.y, rf(2)), prob.x, 1));
}

TEST_CASE("a one-tree forest without bootstrap equals a single tree") {
  const auto prob = friedman(150, 4, 5);
  auto p = rf(1);
  p.bootstrap = false;
  p.features_per_split = FeatureSampling::fraction(0.5);
  const auto forest = fit_forest(prob.x, prob.y, p);
  Rng rng(derive_seed(p.seed, {0}));
  const auto tree = fit_tree(prob.x, prob.y, p, rng);
  for (std::size_t r = 0; r < prob.x.rows(); ++r) {
    CHECK(forest.predict_row(prob.x.row(r)) == tree.predict(prob.x.row(r)));
  }
}

TEST_CASE("fitting is deterministic and independent of the worker count") {
  const auto prob = friedman(200, 6, 6);
  auto p = rf(8);
  p.features_per_split = FeatureSampling::fraction(1.0 / 3.0);
  set_max_jobs(1);
  const auto a = predict(fit_forest(prob.x, prob.y, p), prob.x);
  set_max_jobs(3);
  const auto b = predict(fit_forest(prob.x, prob.y, p), prob.x);
  set_max_jobs(0);
  CHECK(a == b);
  p.seed = 4;
  CHECK(predict(fit_forest(prob.x, prob.y, p), prob.x) != a);
}

TEST_CASE("grid search matches a brute-force CV oracle exactly") {
  const auto prob = friedman(200, 5, 7);
  std::vector<EnsembleParams> grid;
  for (std::size_t depth : {2, 6}) {
    for (std::size_t leaf : {1, 10}) {
      auto p = rf(5);
      p.max_depth = depth;
      p.min_samples_leaf = leaf;
      grid.push_back(p);
    }
  }
  const auto got = grid_search_cv(prob.x, prob.y, grid, 5, 99);
  const auto want = oracle::cross_validate(prob.x, prob.y, grid, 5, 99);
  CHECK(got.mean_mse == want.mean_mse);
  CHECK(got.chosen == want.chosen);

  CHECK(fold_bounds(10, 3, 0) == std::pair<std::size_t, std::size_t>{0, 3});
  CHECK(fold_bounds(10, 3, 2) == std::pair<std::size_t, std::size_t>{6, 10});

  // Identical candidates tie; the earlier one wins.
  const auto tie = grid_search_cv(prob.x, prob.y, {grid[1], grid[1]}, 4, 1);
  CHECK(tie.chosen == 0);
}

TEST_CASE("parameter validation") {
  EnsembleParams p;
  p.n_estimators = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = {};
  p.features_per_split = FeatureSampling::fraction(1.5);
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  CHECK(FeatureSampling::fraction(1.0 / 3.0).resolve(300) == 100);
  CHECK(FeatureSampling::fraction(0.01).resolve(10) == 1);
  CHECK(FeatureSampling::count(50).resolve(10) == 10);
  CHECK(FeatureSampling::all().resolve(7) == 7);
}
