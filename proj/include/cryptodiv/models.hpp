#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cryptodiv/matrix.hpp"
#include "cryptodiv/random.hpp"

namespace cryptodiv {

enum class EnsembleKind { RandomForest, GradientBoost };

std::string_view ensemble_tag(EnsembleKind kind); // "rf" / "gbt"

/// How many features a split considers: all of them, a fraction of them
/// (at least one), or a fixed count (capped at the feature count).
struct FeatureSampling {
  enum class Mode { All, Fraction, Count };
  Mode mode = Mode::All;
  double value = 1.0;

  static FeatureSampling all() { return {}; }
  static FeatureSampling fraction(double f) { return {Mode::Fraction, f}; }
  static FeatureSampling count(std::size_t n) { return {Mode::Count, static_cast<double>(n)}; }

  [[nodiscard]] std::size_t resolve(std::size_t n_features) const;
  [[nodiscard]] std::string describe() const;
  friend bool operator==(const FeatureSampling&, const FeatureSampling&) = default;
};

struct EnsembleParams {
  EnsembleKind kind = EnsembleKind::RandomForest;
  std::size_t n_estimators = 100;
  std::optional<std::size_t> max_depth = std::nullopt; // unlimited when empty
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
  FeatureSampling features_per_split = FeatureSampling::all();
  double learning_rate = 0.1; // boosting only
  bool bootstrap = true;      // forests only
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const EnsembleParams&, const EnsembleParams&) = default;
};

struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::size_t samples = 0;
  double impurity = 0.0; // variance of the node's targets
  double value = 0.0;    // mean of the node's targets

  [[nodiscard]] bool is_leaf() const { return left < 0; }
};

/// Nodes are stored flat; node 0 is the root.
struct Tree {
  std::vector<TreeNode> nodes;

  [[nodiscard]] double predict(std::span<const double> row) const;
  [[nodiscard]] std::size_t depth() const;
  [[nodiscard]] std::size_t leaves() const;
};

struct TreeEnsemble {
  EnsembleKind kind = EnsembleKind::RandomForest;
  std::vector<Tree> trees;
  double base = 0.0;         // boosting: initial prediction
  double learning_rate = 1.0; // boosting: shrinkage per stage
  std::size_t n_features = 0;
  bool node_stats = true;
  std::vector<double> train_loss; // boosting: MSE before stage 1, then after each stage
  EnsembleParams params;

  [[nodiscard]] double predict_row(std::span<const double> row) const;
  /// Features used by at least one split.
  [[nodiscard]] std::vector<bool> used_features() const;
};

/// CART regression tree on the rows listed in `sample` (duplicates allowed).
Tree fit_tree(const Matrix& x, std::span<const double> y, std::span<const std::size_t> sample,
              const EnsembleParams& params, Rng& rng);

/// CART regression tree on all rows.
Tree fit_tree(const Matrix& x, std::span<const double> y, const EnsembleParams& params, Rng& rng);

/// Bagged trees; tree i draws from the stream derive_seed(params.seed, {i}).
TreeEnsemble fit_forest(const Matrix& x, std::span<const double> y, const EnsembleParams& params);

/// Least-squares gradient boosting from the mean of y.
TreeEnsemble fit_gbt(const Matrix& x, std::span<const double> y, const EnsembleParams& params);

/// Dispatches on params.kind.
TreeEnsemble fit_ensemble(const Matrix& x, std::span<const double> y, const EnsembleParams& params);

std::vector<double> predict(const TreeEnsemble& model, const Matrix& x);

/// Boosting prediction using only the first `stages` trees.
std::vector<double> predict_staged(const TreeEnsemble& model, const Matrix& x, std::size_t stages);

double mse(std::span<const double> y, std::span<const double> yhat);

struct CVResult {
  std::vector<double> mean_mse;             // per candidate
  std::vector<std::vector<double>> fold_mse; // [candidate][fold]
  std::size_t chosen = 0;
};

/// Row range [first, second) of fold `fold` out of `k` contiguous blocks.
std::pair<std::size_t, std::size_t> fold_bounds(std::size_t n, std::size_t k, std::size_t fold);

/// k-fold grid search over contiguous, unshuffled folds. Every fit uses
/// `seed`. Lowest mean held-out MSE wins; ties go to the earlier candidate.
CVResult grid_search_cv(const Matrix& x, std::span<const double> y,
                        const std::vector<EnsembleParams>& grid, std::size_t k,
                        std::uint64_t seed);

} // namespace cryptodiv
