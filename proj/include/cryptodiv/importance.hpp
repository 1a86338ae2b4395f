#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cryptodiv/data.hpp"
#include "cryptodiv/matrix.hpp"
#include "cryptodiv/models.hpp"

namespace cryptodiv {

enum class ImportanceMethod { Pearson, MDI, PFI, Shapley };

std::string_view method_tag(ImportanceMethod m); // pearson, mdi, pfi, shapley

struct ImportanceReport {
  ImportanceMethod method = ImportanceMethod::Pearson;
  std::string model;                  // "rf", "gbt", or empty
  std::vector<std::string> features;  // score order
  std::vector<double> scores;
  std::vector<std::string> ranking;   // descending score, ties by ascending name
  std::size_t repeats = 0;
  std::uint64_t seed = 0;

  [[nodiscard]] double score(std::string_view feature) const;
  /// 0-based position in the ranking.
  [[nodiscard]] std::size_t rank_of(std::string_view feature) const;
};

ImportanceReport make_report(ImportanceMethod method, std::vector<std::string> features,
                             std::vector<double> scores, std::string model = {});

/// Descending score, ties broken by ascending name.
std::vector<std::string> rank_features(std::span<const std::string> features,
                                       std::span<const double> scores);

class UndefinedCorrelation : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Sample Pearson coefficient. Throws UndefinedCorrelation on a constant input.
double pearson(std::span<const double> x, std::span<const double> y);

/// Pearson, with constant inputs scored 0.
double pearson_or_zero(std::span<const double> x, std::span<const double> y);

/// |pearson(feature, target)| for every feature of a targeted dataset.
ImportanceReport pearson_report(const Dataset& dataset);

/// Mean decrease in impurity, normalized to sum to 1 (all zeros if the model
/// never splits). Throws if the model carries no node statistics.
ImportanceReport mdi(const TreeEnsemble& model, std::span<const std::string> names);

using BatchPredictor = std::function<std::vector<double>(const Matrix&)>;
using RowPredictor = std::function<double(std::span<const double>)>;

/// Mean increase in MSE when a column is permuted. The permutation for
/// feature `name`, repeat r comes from derive_seed(seed, {stable_hash(name), r}).
ImportanceReport pfi(const BatchPredictor& model, const Matrix& x, std::span<const double> y,
                     std::span<const std::string> names, std::size_t repeats, std::uint64_t seed);

/// Tree-ensemble PFI. Features the model never splits on score exactly 0.
ImportanceReport pfi(const TreeEnsemble& model, const Matrix& x, std::span<const double> y,
                     std::span<const std::string> names, std::size_t repeats, std::uint64_t seed);

struct ShapleyResult {
  Matrix phi;        // explained rows x features
  Matrix std_error;  // sampled estimator only; zeros for exact
  double base_value = 0.0; // mean prediction over the background
  std::size_t permutations = 0;
  ImportanceReport report; // mean |phi| per feature
};

inline constexpr std::size_t kMaxExactShapleyFeatures = 12;

/// Interventional Shapley values by full subset enumeration (2^p coalitions).
ShapleyResult shapley_exact(const RowPredictor& model, const Matrix& background,
                            const Matrix& explain, std::span<const std::string> names);

/// Permutation-sampling estimate of the same quantity. Each permutation walks
/// every background row from all-background to all-explained.
ShapleyResult shapley_sampled(const RowPredictor& model, const Matrix& background,
                              const Matrix& explain, std::span<const std::string> names,
                              std::size_t n_permutations, std::uint64_t seed);

RowPredictor row_predictor(const TreeEnsemble& model);

/// At most max_rows rows, chosen without replacement and kept in original order.
Matrix subsample_rows(const Matrix& x, std::size_t max_rows, std::uint64_t seed);

} // namespace cryptodiv
