#include "cryptodiv/models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cryptodiv/csv.hpp"
#include "cryptodiv/parallel.hpp"

namespace cryptodiv {

std::string_view ensemble_tag(EnsembleKind kind) {
  return kind == EnsembleKind::RandomForest ? "rf" : "gbt";
}

std::size_t FeatureSampling::resolve(std::size_t n_features) const {
  switch (mode) {
    case Mode::All: return n_features;
    case Mode::Fraction:
      return std::clamp<std::size_t>(
          static_cast<std::size_t>(std::floor(value * static_cast<double>(n_features))), 1,
          n_features);
    case Mode::Count:
      return std::clamp<std::size_t>(static_cast<std::size_t>(value), 1, n_features);
  }
  return n_features;
}

std::string FeatureSampling::describe() const {
  switch (mode) {
    case Mode::All: return "all";
    case Mode::Fraction: return format_number(value);
    case Mode::Count: return std::to_string(static_cast<std::size_t>(value));
  }
  return "all";
}

void EnsembleParams::validate() const {
  if (n_estimators < 1) throw std::invalid_argument("n_estimators must be >= 1");
  if (max_depth && *max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
  if (min_samples_split < 2) throw std::invalid_argument("min_samples_split must be >= 2");
  if (min_samples_leaf < 1) throw std::invalid_argument("min_samples_leaf must be >= 1");
  if (features_per_split.mode == FeatureSampling::Mode::Fraction &&
      !(features_per_split.value > 0.0 && features_per_split.value <= 1.0)) {
    throw std::invalid_argument("features_per_split fraction must be in (0, 1]");
  }
  if (features_per_split.mode == FeatureSampling::Mode::Count && features_per_split.value < 1) {
    throw std::invalid_argument("features_per_split count must be >= 1");
  }
  if (kind == EnsembleKind::GradientBoost && !(learning_rate > 0.0 && learning_rate <= 1.0)) {
    throw std::invalid_argument("learning_rate must be in (0, 1]");
  }
}

double Tree::predict(std::span<const double> row) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                         : n.right);
  }
  return nodes[i].value;
}

std::size_t Tree::depth() const {
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

std::size_t Tree::leaves() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

double TreeEnsemble::predict_row(std::span<const double> row) const {
  if (row.size() != n_features) throw std::invalid_argument("predict: feature count mismatch");
  if (kind == EnsembleKind::RandomForest) {
    double sum = 0.0;
    for (const auto& t : trees) sum += t.predict(row);
    return sum / static_cast<double>(trees.size());
  }
  double sum = 0.0;
  for (const auto& t : trees) sum += t.predict(row);
  return base + learning_rate * sum;
}

std::vector<bool> TreeEnsemble::used_features() const {
  std::vector<bool> used(n_features, false);
  for (const auto& t : trees) {
    for (const auto& n : t.nodes) {
      if (!n.is_leaf()) used[static_cast<std::size_t>(n.feature)] = true;
    }
  }
  return used;
}

namespace {

void check_inputs(const Matrix& x, std::span<const double> y) {
  if (x.rows() != y.size()) {
    throw std::invalid_argument("dimension mismatch: " + std::to_string(x.rows()) + " rows vs " +
                                std::to_string(y.size()) + " targets");
  }
  if (y.empty()) throw std::invalid_argument("cannot fit on zero rows");
  if (x.cols() == 0) throw std::invalid_argument("cannot fit on zero features");
}

struct Split {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double score = 0.0; // sumL^2/nL + sumR^2/nR, larger is better
};

class TreeBuilder {
public:
  TreeBuilder(const Matrix& x, std::span<const double> y, const EnsembleParams& params, Rng& rng)
      : x_(x), y_(y), params_(params), rng_(rng),
        per_split_(params.features_per_split.resolve(x.cols())) {}

  Tree build(std::vector<std::size_t> sample) {
    sample_ = std::move(sample);
    buffer_.resize(sample_.size());
    grow(0, sample_.size(), 0);
    return std::move(tree_);
  }

private:
  int grow(std::size_t begin, std::size_t end, std::size_t depth) {
    const std::size_t n = end - begin;
    double sum = 0.0;
    for (std::size_t i = begin; i < end; ++i) sum += y_[sample_[i]];
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    bool pure = true;
    const double first = y_[sample_[begin]];
    for (std::size_t i = begin; i < end; ++i) {
      const double v = y_[sample_[i]];
      ss += (v - mean) * (v - mean);
      pure = pure && v == first;
    }

    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({-1, 0.0, -1, -1, n, pure ? 0.0 : ss / static_cast<double>(n), mean});

    const bool depth_ok = !params_.max_depth || depth < *params_.max_depth;
    if (pure || !depth_ok || n < params_.min_samples_split || n < 2 * params_.min_samples_leaf) {
      return id;
    }
    const Split split = best_split(begin, end);
    if (!split.found) return id;

    const auto mid_it = std::partition(
        sample_.begin() + static_cast<long>(begin), sample_.begin() + static_cast<long>(end),
        [&](std::size_t r) { return x_(r, split.feature) <= split.threshold; });
    const auto mid = static_cast<std::size_t>(mid_it - sample_.begin());

    const int left = grow(begin, mid, depth + 1);
    const int right = grow(mid, end, depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = static_cast<int>(split.feature);
    node.threshold = split.threshold;
    node.left = left;
    node.right = right;
    return id;
  }

  Split best_split(std::size_t begin, std::size_t end) {
    const std::size_t n = end - begin;
    const std::size_t leaf = params_.min_samples_leaf;
    std::vector<std::size_t> candidates;
    if (per_split_ < x_.cols()) {
      candidates = rng_.sample_without_replacement(x_.cols(), per_split_);
    } else {
      candidates.resize(x_.cols());
      for (std::size_t j = 0; j < candidates.size(); ++j) candidates[j] = j;
    }

    Split best;
    for (std::size_t f : candidates) {
      auto* buf = buffer_.data();
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = sample_[begin + i];
        buf[i] = {x_(r, f), y_[r]};
      }
      std::sort(buf, buf + n, [](const auto& a, const auto& b) { return a.first < b.first; });
      if (buf[0].first == buf[n - 1].first) continue;

      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) total += buf[i].second;
      double left_sum = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_sum += buf[i].second;
        const std::size_t nl = i + 1;
        if (buf[i].first == buf[i + 1].first) continue;
        if (nl < leaf || n - nl < leaf) continue;
        const double right_sum = total - left_sum;
        const double score = left_sum * left_sum / static_cast<double>(nl) +
                             right_sum * right_sum / static_cast<double>(n - nl);
        if (!best.found || score > best.score) {
          double threshold = 0.5 * (buf[i].first + buf[i + 1].first);
          if (!(threshold < buf[i + 1].first)) threshold = buf[i].first;
          best = {true, f, threshold, score};
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  std::span<const double> y_;
  const EnsembleParams& params_;
  Rng& rng_;
  std::size_t per_split_;
  std::vector<std::size_t> sample_;
  std::vector<std::pair<double, double>> buffer_;
  Tree tree_;
};

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = i;
  return rows;
}

} // namespace

Tree fit_tree(const Matrix& x, std::span<const double> y, std::span<const std::size_t> sample,
              const EnsembleParams& params, Rng& rng) {
  check_inputs(x, y);
  params.validate();
  if (sample.empty()) throw std::invalid_argument("fit_tree: empty sample");
  TreeBuilder builder(x, y, params, rng);
  return builder.build({sample.begin(), sample.end()});
}

Tree fit_tree(const Matrix& x, std::span<const double> y, const EnsembleParams& params, Rng& rng) {
  const auto rows = all_rows(y.size());
  return fit_tree(x, y, rows, params, rng);
}

TreeEnsemble fit_forest(const Matrix& x, std::span<const double> y, const EnsembleParams& params) {
  check_inputs(x, y);
  params.validate();
  TreeEnsemble model;
  model.kind = EnsembleKind::RandomForest;
  model.n_features = x.cols();
  model.params = params;
  model.params.kind = EnsembleKind::RandomForest;
  model.trees.resize(params.n_estimators);
  const std::size_t n = y.size();
  parallel_for(params.n_estimators, [&](std::size_t t) {
    Rng rng(derive_seed(params.seed, {t}));
    std::vector<std::size_t> sample;
    if (params.bootstrap) {
      sample.resize(n);
      for (auto& s : sample) s = rng.index(n);
    } else {
      sample = all_rows(n);
    }
    model.trees[t] = fit_tree(x, y, sample, params, rng);
  });
  return model;
}

TreeEnsemble fit_gbt(const Matrix& x, std::span<const double> y, const EnsembleParams& params) {
  check_inputs(x, y);
  params.validate();
  const std::size_t n = y.size();
  TreeEnsemble model;
  model.kind = EnsembleKind::GradientBoost;
  model.n_features = x.cols();
  model.params = params;
  model.params.kind = EnsembleKind::GradientBoost;
  model.learning_rate = params.learning_rate;
  double sum = 0.0;
  for (double v : y) sum += v;
  model.base = sum / static_cast<double>(n);

  std::vector<double> fitted(n, model.base);
  std::vector<double> residual(n);
  const auto rows = all_rows(n);
  model.train_loss.push_back(mse(y, fitted));
  for (std::size_t stage = 0; stage < params.n_estimators; ++stage) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - fitted[i];
    Rng rng(derive_seed(params.seed, {stage}));
    Tree tree = fit_tree(x, residual, rows, params, rng);
    for (std::size_t i = 0; i < n; ++i) fitted[i] += params.learning_rate * tree.predict(x.row(i));
    model.trees.push_back(std::move(tree));
    model.train_loss.push_back(mse(y, fitted));
  }
  return model;
}

TreeEnsemble fit_ensemble(const Matrix& x, std::span<const double> y, const EnsembleParams& params) {
  return params.kind == EnsembleKind::RandomForest ? fit_forest(x, y, params)
                                                   : fit_gbt(x, y, params);
}

std::vector<double> predict(const TreeEnsemble& model, const Matrix& x) {
  if (x.cols() != model.n_features) {
    throw std::invalid_argument("predict: expected " + std::to_string(model.n_features) +
                                " features, got " + std::to_string(x.cols()));
  }
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = model.predict_row(x.row(r));
  return out;
}

std::vector<double> predict_staged(const TreeEnsemble& model, const Matrix& x, std::size_t stages) {
  if (model.kind != EnsembleKind::GradientBoost) {
    throw std::invalid_argument("predict_staged: boosting models only");
  }
  if (x.cols() != model.n_features) throw std::invalid_argument("predict: feature count mismatch");
  stages = std::min(stages, model.trees.size());
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double sum = 0.0;
    for (std::size_t t = 0; t < stages; ++t) sum += model.trees[t].predict(x.row(r));
    out[r] = model.base + model.learning_rate * sum;
  }
  return out;
}

double mse(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size()) throw std::invalid_argument("mse: length mismatch");
  if (y.empty()) throw std::invalid_argument("mse: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) sum += (y[i] - yhat[i]) * (y[i] - yhat[i]);
  return sum / static_cast<double>(y.size());
}

std::pair<std::size_t, std::size_t> fold_bounds(std::size_t n, std::size_t k, std::size_t fold) {
  return {fold * n / k, (fold + 1) * n / k};
}

CVResult grid_search_cv(const Matrix& x, std::span<const double> y,
                        const std::vector<EnsembleParams>& grid, std::size_t k,
                        std::uint64_t seed) {
  if (grid.empty()) throw std::invalid_argument("grid_search_cv: empty grid");
  if (k < 2) throw std::invalid_argument("grid_search_cv: k must be >= 2");
  check_inputs(x, y);
  const std::size_t n = y.size();
  if (n < k) throw std::invalid_argument("grid_search_cv: fewer rows than folds");
  for (const auto& p : grid) p.validate();

  CVResult result;
  result.fold_mse.assign(grid.size(), std::vector<double>(k, 0.0));
  parallel_for(grid.size() * k, [&](std::size_t unit) {
    const std::size_t c = unit / k;
    const std::size_t f = unit % k;
    const auto [lo, hi] = fold_bounds(n, k, f);
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t r = 0; r < n; ++r) (r >= lo && r < hi ? test_rows : train_rows).push_back(r);
    const Matrix x_train = x.select_rows(train_rows);
    const Matrix x_test = x.select_rows(test_rows);
    std::vector<double> y_train, y_test;
    for (auto r : train_rows) y_train.push_back(y[r]);
    for (auto r : test_rows) y_test.push_back(y[r]);
    EnsembleParams params = grid[c];
    params.seed = seed;
    const auto model = fit_ensemble(x_train, y_train, params);
    result.fold_mse[c][f] = mse(y_test, predict(model, x_test));
  });

  for (std::size_t c = 0; c < grid.size(); ++c) {
    double sum = 0.0;
    for (double v : result.fold_mse[c]) sum += v;
    result.mean_mse.push_back(sum / static_cast<double>(k));
    if (result.mean_mse[c] < result.mean_mse[result.chosen]) result.chosen = c;
  }
  return result;
}

} // namespace cryptodiv
