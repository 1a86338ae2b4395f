#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cryptodiv/experiments.hpp"
#include "cryptodiv/index.hpp"

namespace cryptodiv {

/// Where the forecast target comes from: either market caps turned into the
/// index on the fly, or a precomputed index / price CSV.
struct IndexSource {
  std::optional<std::filesystem::path> mcaps;     // date,asset,market_cap_usd
  std::optional<std::filesystem::path> index_csv; // date,sum_mcap,index_value,power
  std::optional<std::filesystem::path> price_csv; // date,<price>
  IndexParams params;
};

/// Cartesian product of per-parameter value lists.
struct GridFamily {
  std::vector<std::size_t> n_estimators;
  std::vector<std::optional<std::size_t>> max_depth; // nullopt = unlimited
  std::vector<std::size_t> min_samples_split;
  std::vector<std::size_t> min_samples_leaf;
  std::vector<FeatureSampling> features_per_split;
  std::vector<double> learning_rate;
  bool bootstrap = true;

  [[nodiscard]] std::vector<EnsembleParams> expand(EnsembleKind kind) const;
};

GridFamily default_rf_grid();
GridFamily default_gbt_grid();

struct RunConfig {
  std::filesystem::path manifest;
  IndexSource index;
  std::filesystem::path output_dir = "results";
  std::size_t jobs = 0; // 0 = hardware concurrency
  GridFamily rf_grid = default_rf_grid();
  GridFamily gbt_grid = default_gbt_grid();
  ExperimentConfig experiment;

  /// Grids expanded into the experiment config. A single-candidate grid is
  /// used directly without cross-validation.
  [[nodiscard]] ExperimentConfig resolved() const;
  /// Referenced paths exist, windows >= 1, and the nested configs validate.
  void validate() const;
};

/// Parses a JSON config. Relative paths resolve against the file's directory.
/// Unknown keys and type errors are reported with their dotted location.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir,
                       std::string_view source);

/// "2017-01-01,2019-01-01" and "1,7,30".
std::vector<Date> parse_date_list(std::string_view text);
std::vector<int> parse_int_list(std::string_view text);

} // namespace cryptodiv
