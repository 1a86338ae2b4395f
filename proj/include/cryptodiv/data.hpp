#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cryptodiv/calendar.hpp"
#include "cryptodiv/matrix.hpp"

namespace cryptodiv {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) { return std::isnan(v); }

enum class Category {
  Macro,
  Technical,
  SentimentInterest,
  TraditionalIndex,
  OnChainBTC,
  OnChainUSDC,
  Market,
};

inline constexpr std::array<Category, 7> kAllCategories = {
    Category::Macro,      Category::Technical,   Category::SentimentInterest,
    Category::TraditionalIndex, Category::OnChainBTC, Category::OnChainUSDC,
    Category::Market};

/// Manifest tag: macro, technical, sentiment, trad_index, onchain_btc,
/// onchain_usdc, market.
std::string_view category_tag(Category c);
Category parse_category(std::string_view tag);
/// Human-readable label used in report tables.
std::string_view category_label(Category c);

struct Point {
  Date date;
  double value = kMissing;
};

struct MetricSeries {
  std::string name;
  Category category = Category::Market;
  std::vector<Point> points;
};

using Corpus = std::vector<MetricSeries>;

/// Loads every metric listed in a JSON manifest of the form
///
///   {"metrics": [{"name": "SplyCur", "file": "btc.csv", "category": "onchain_btc"}, ...]}
///
/// File paths are relative to the manifest's directory. Every column of every
/// referenced file must be declared, and no metric may appear in two files.
/// Series come back in manifest order.
Corpus load_corpus(const std::filesystem::path& manifest_path);

/// Keeps the first point for each date and sorts by date (stable).
MetricSeries dedupe(MetricSeries series);

/// Lays the series on a daily grid from its first to its last point and fills
/// interior gaps by linear interpolation in calendar days. Leading and
/// trailing missing values stay missing.
MetricSeries interpolate_fill(MetricSeries series);

/// Like interpolate_fill but carries the last observation forward. Used for
/// markets that close on weekends.
MetricSeries forward_fill(MetricSeries series);

/// Column-aligned corpus on a strict daily calendar.
struct Column {
  std::string name;
  Category category = Category::Market;
  std::vector<double> values;
};

struct Panel {
  std::vector<Date> dates; // consecutive days
  std::vector<Column> columns;
};

/// Places every series on the common daily calendar spanning the earliest to
/// the latest observation in the corpus. Absent days are missing.
Panel align(const Corpus& corpus);

struct DegeneracyOptions {
  long flat_run_max = 60;         // days
  double missing_ratio_max = 0.20; // fraction of the observed span
};

struct LogRecord {
  std::string metric;
  std::string reason;
  std::string detail;
};

struct DropResult {
  Panel panel;
  std::vector<LogRecord> log;
};

/// Longest stretch, in calendar days, over which consecutive observations
/// hold the same value. Missing days inside a stretch do not break it.
long longest_flat_run(std::span<const double> values);

/// Fraction of missing days between the first and last observation (1 when
/// the column has no observations).
double missing_ratio(std::span<const double> values);

/// Drops columns that are missing too often (reason "missing") or flat for
/// too long (reason "flat"). Each dropped column is logged exactly once;
/// the missing check runs first.
DropResult drop_degenerate(Panel panel, const DegeneracyOptions& options);

struct CleanCorpus {
  Panel panel;
  std::vector<LogRecord> drop_log;
  std::vector<LogRecord> imputation_log;
};

/// dedupe -> align -> forward-fill traditional indices (logged as imputed)
/// -> drop_degenerate -> interpolate the remaining columns' interior gaps.
CleanCorpus clean_corpus(const Corpus& corpus, const DegeneracyOptions& options);

/// Adds derived columns to a panel. Names must not collide with existing ones.
void append_columns(Panel& panel, std::vector<Column> extra);

struct Scenario {
  Date period_start;
  int window = 1;

  /// "2017_7" style label.
  [[nodiscard]] std::string label() const;
  [[nodiscard]] std::string set_label() const;
};

struct Dataset {
  std::vector<Date> dates;
  std::vector<std::string> features;
  std::vector<std::vector<double>> columns; // one per feature, rows() long
  std::map<std::string, Category> categories;
  std::optional<std::vector<double>> target;
  int window = 0;

  [[nodiscard]] std::size_t rows() const { return dates.size(); }
  [[nodiscard]] std::size_t feature_count() const { return features.size(); }
  [[nodiscard]] std::size_t feature_index(std::string_view name) const;
  [[nodiscard]] const std::vector<double>& column(std::string_view name) const;

  /// Row-major matrix of the named features, in the given order.
  [[nodiscard]] Matrix matrix(std::span<const std::string> names) const;
  [[nodiscard]] Matrix matrix() const { return matrix(features); }

  /// Same rows, only the named columns (order as given).
  [[nodiscard]] Dataset select(std::span<const std::string> names) const;
  /// Rows [begin, end).
  [[nodiscard]] Dataset slice_rows(std::size_t begin, std::size_t end) const;
  /// Columns reordered by ascending feature name.
  [[nodiscard]] Dataset canonical() const;
};

struct SliceResult {
  Dataset dataset;
  std::vector<LogRecord> exclusions; // reasons: late_start, trailing_gap
};

/// Restricts a cleaned panel to [period_start, last date]. Features first
/// observed after period_start, or with missing values inside the slice, are
/// excluded and logged.
SliceResult slice_period(const Panel& panel, const Scenario& scenario);

/// target[t] = price[t + window]. Rows without a future price are dropped.
Dataset make_target(Dataset dataset, std::span<const Point> index_price, int window);

/// Final max(1, floor(n * holdout)) rows form the test set.
std::pair<Dataset, Dataset> chronological_split(const Dataset& dataset, double holdout);

} // namespace cryptodiv
