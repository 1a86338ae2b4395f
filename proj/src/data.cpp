#include "cryptodiv/data.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "cryptodiv/csv.hpp"
#include "cryptodiv/parallel.hpp"

namespace cryptodiv {

namespace {

struct CategoryInfo {
  Category category;
  std::string_view tag;
  std::string_view label;
};

constexpr std::array<CategoryInfo, 7> kCategoryInfo = {{
    {Category::Macro, "macro", "Macroeconomic Indicators"},
    {Category::Technical, "technical", "Technical Indicators"},
    {Category::SentimentInterest, "sentiment", "Sentiment and Interest Metrics"},
    {Category::TraditionalIndex, "trad_index", "Traditional Market Indices"},
    {Category::OnChainBTC, "onchain_btc", "On-chain Metrics (BTC)"},
    {Category::OnChainUSDC, "onchain_usdc", "On-chain Metrics (USDC)"},
    {Category::Market, "market", "Market Data"},
}};

const CategoryInfo& info(Category c) {
  for (const auto& i : kCategoryInfo) {
    if (i.category == c) return i;
  }
  throw std::logic_error("unknown category");
}

struct ManifestEntry {
  std::string name;
  std::string file;
  Category category;
};

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open manifest: " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("metrics") || !doc["metrics"].is_array()) {
    throw InputError(path.string() + ": expected an object with a 'metrics' array");
  }
  std::vector<ManifestEntry> entries;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < doc["metrics"].size(); ++i) {
    const auto& m = doc["metrics"][i];
    const std::string where = path.string() + ": metrics[" + std::to_string(i) + "]";
    if (!m.is_object() || !m.contains("name") || !m.contains("file") ||
        !m.contains("category")) {
      throw InputError(where + ": needs 'name', 'file' and 'category'");
    }
    ManifestEntry e;
    e.name = m["name"].get<std::string>();
    e.file = m["file"].get<std::string>();
    try {
      e.category = parse_category(m["category"].get<std::string>());
    } catch (const std::invalid_argument& err) {
      throw InputError(where + ": " + err.what());
    }
    if (!seen.insert(e.name).second) {
      throw InputError(where + ": metric '" + e.name + "' listed twice");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

struct FileColumns {
  std::vector<std::string> names;
  std::vector<std::vector<Point>> points;
};

FileColumns read_metric_file(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  if (table.header.empty() || table.header.front() != "date") {
    throw InputError(path.string() + ": first column must be 'date'");
  }
  FileColumns out;
  out.names.assign(table.header.begin() + 1, table.header.end());
  out.points.resize(out.names.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = table.line_numbers[r];
    Date date;
    try {
      date = Date::parse(row[0]);
    } catch (const std::invalid_argument& e) {
      throw InputError(path.string() + ":" + std::to_string(line) + ": " + e.what());
    }
    for (std::size_t c = 1; c < row.size(); ++c) {
      out.points[c - 1].push_back({date, parse_cell(row[c], path, line)});
    }
  }
  return out;
}

/// Fills interior gaps of a daily column in place.
std::size_t fill_column(std::vector<double>& values, bool carry_forward) {
  std::size_t filled = 0;
  std::size_t prev = values.size();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (is_missing(values[i])) continue;
    if (prev != values.size() && i > prev + 1) {
      const double a = values[prev];
      const double b = values[i];
      const double span = static_cast<double>(i - prev);
      for (std::size_t k = prev + 1; k < i; ++k) {
        values[k] = carry_forward ? a : a + (b - a) * static_cast<double>(k - prev) / span;
        ++filled;
      }
    }
    prev = i;
  }
  return filled;
}

MetricSeries fill_series(MetricSeries series, bool carry_forward) {
  series = dedupe(std::move(series));
  if (series.points.empty()) return series;
  const Date first = series.points.front().date;
  const Date last = series.points.back().date;
  std::vector<double> daily(static_cast<std::size_t>(last - first) + 1, kMissing);
  for (const auto& p : series.points) daily[static_cast<std::size_t>(p.date - first)] = p.value;
  fill_column(daily, carry_forward);
  series.points.clear();
  series.points.reserve(daily.size());
  for (std::size_t i = 0; i < daily.size(); ++i) {
    series.points.push_back({first.plus_days(static_cast<long>(i)), daily[i]});
  }
  return series;
}

std::pair<std::size_t, std::size_t> observed_span(std::span<const double> values) {
  std::size_t first = values.size();
  std::size_t last = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!is_missing(values[i])) {
      if (first == values.size()) first = i;
      last = i;
    }
  }
  return {first, last};
}

} // namespace

std::string_view category_tag(Category c) { return info(c).tag; }
std::string_view category_label(Category c) { return info(c).label; }

Category parse_category(std::string_view tag) {
  for (const auto& i : kCategoryInfo) {
    if (i.tag == tag) return i.category;
  }
  throw std::invalid_argument("unknown category '" + std::string(tag) + "'");
}

Corpus load_corpus(const std::filesystem::path& manifest_path) {
  const auto entries = read_manifest(manifest_path);
  const auto base = manifest_path.parent_path();

  std::vector<std::string> files;
  std::unordered_map<std::string, const ManifestEntry*> by_name;
  for (const auto& e : entries) {
    if (std::find(files.begin(), files.end(), e.file) == files.end()) files.push_back(e.file);
    by_name.emplace(e.name, &e);
  }

  std::vector<FileColumns> loaded(files.size());
  parallel_for(files.size(), [&](std::size_t i) {
    const auto path = base / files[i];
    if (!std::filesystem::exists(path)) throw InputError("missing file: " + path.string());
    loaded[i] = read_metric_file(path);
  });

  std::unordered_map<std::string, std::vector<Point>> found;
  std::unordered_map<std::string, std::string> found_in;
  for (std::size_t f = 0; f < files.size(); ++f) {
    const auto path = (base / files[f]).string();
    for (std::size_t c = 0; c < loaded[f].names.size(); ++c) {
      const std::string& name = loaded[f].names[c];
      const auto it = by_name.find(name);
      if (it == by_name.end()) {
        throw InputError(path + ": metric '" + name + "' is not in the manifest");
      }
      if (const auto prev = found_in.find(name); prev != found_in.end()) {
        throw InputError(path + ": duplicate metric '" + name + "' (also in " +
                         prev->second + ")");
      }
      if (it->second->file != files[f]) {
        throw InputError(path + ": duplicate metric '" + name + "' (manifest assigns it to " +
                         it->second->file + ")");
      }
      found_in.emplace(name, path);
      found.emplace(name, std::move(loaded[f].points[c]));
    }
  }

  Corpus corpus;
  corpus.reserve(entries.size());
  for (const auto& e : entries) {
    auto it = found.find(e.name);
    if (it == found.end()) {
      throw InputError((base / e.file).string() + ": metric '" + e.name + "' not found");
    }
    corpus.push_back({e.name, e.category, std::move(it->second)});
  }
  return corpus;
}

MetricSeries dedupe(MetricSeries series) {
  std::stable_sort(series.points.begin(), series.points.end(),
                   [](const Point& a, const Point& b) { return a.date < b.date; });
  auto last = std::unique(series.points.begin(), series.points.end(),
                          [](const Point& a, const Point& b) { return a.date == b.date; });
  series.points.erase(last, series.points.end());
  return series;
}

MetricSeries interpolate_fill(MetricSeries series) { return fill_series(std::move(series), false); }

MetricSeries forward_fill(MetricSeries series) { return fill_series(std::move(series), true); }

Panel align(const Corpus& corpus) {
  Panel panel;
  std::optional<Date> lo, hi;
  for (const auto& s : corpus) {
    for (const auto& p : s.points) {
      if (!lo || p.date < *lo) lo = p.date;
      if (!hi || p.date > *hi) hi = p.date;
    }
  }
  if (!lo) {
    for (const auto& s : corpus) panel.columns.push_back({s.name, s.category, {}});
    return panel;
  }
  const auto days = static_cast<std::size_t>(*hi - *lo) + 1;
  panel.dates.reserve(days);
  for (std::size_t i = 0; i < days; ++i) panel.dates.push_back(lo->plus_days(static_cast<long>(i)));
  for (const auto& s : corpus) {
    Column col{s.name, s.category, std::vector<double>(days, kMissing)};
    for (const auto& p : dedupe(s).points) {
      col.values[static_cast<std::size_t>(p.date - *lo)] = p.value;
    }
    panel.columns.push_back(std::move(col));
  }
  return panel;
}

long longest_flat_run(std::span<const double> values) {
  long best = 0;
  std::size_t run_start = values.size();
  std::size_t prev = values.size();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (is_missing(values[i])) continue;
    if (prev == values.size() || values[i] != values[prev]) run_start = i;
    best = std::max(best, static_cast<long>(i - run_start) + 1);
    prev = i;
  }
  return best;
}

double missing_ratio(std::span<const double> values) {
  const auto [first, last] = observed_span(values);
  if (first == values.size()) return 1.0;
  std::size_t missing = 0;
  for (std::size_t i = first; i <= last; ++i) missing += is_missing(values[i]) ? 1 : 0;
  return static_cast<double>(missing) / static_cast<double>(last - first + 1);
}

DropResult drop_degenerate(Panel panel, const DegeneracyOptions& options) {
  DropResult result;
  result.panel.dates = std::move(panel.dates);
  for (auto& col : panel.columns) {
    const double ratio = missing_ratio(col.values);
    if (ratio > options.missing_ratio_max) {
      result.log.push_back({col.name, "missing",
                            "missing_ratio=" + format_fixed(ratio, 4) + " > " +
                                format_fixed(options.missing_ratio_max, 4)});
      continue;
    }
    const long run = longest_flat_run(col.values);
    if (run >= options.flat_run_max) {
      result.log.push_back({col.name, "flat",
                            "flat_run=" + std::to_string(run) +
                                " >= " + std::to_string(options.flat_run_max)});
      continue;
    }
    result.panel.columns.push_back(std::move(col));
  }
  return result;
}

CleanCorpus clean_corpus(const Corpus& corpus, const DegeneracyOptions& options) {
  // Weekend closures of traditional indices are carried forward before the
  // degeneracy checks so they do not count as missing data.
  Panel aligned = align(corpus);
  std::vector<LogRecord> imputed;
  for (auto& col : aligned.columns) {
    if (col.category != Category::TraditionalIndex) continue;
    const std::size_t filled = fill_column(col.values, true);
    if (filled > 0) imputed.push_back({col.name, "forward_fill", "cells=" + std::to_string(filled)});
  }
  auto dropped = drop_degenerate(std::move(aligned), options);
  CleanCorpus out;
  out.drop_log = std::move(dropped.log);
  out.panel = std::move(dropped.panel);
  std::set<std::string> kept;
  for (auto& col : out.panel.columns) {
    kept.insert(col.name);
    if (col.category != Category::TraditionalIndex) fill_column(col.values, false);
  }
  for (auto& r : imputed) {
    if (kept.contains(r.metric)) out.imputation_log.push_back(std::move(r));
  }
  return out;
}

void append_columns(Panel& panel, std::vector<Column> extra) {
  std::set<std::string> names;
  for (const auto& c : panel.columns) names.insert(c.name);
  for (auto& c : extra) {
    if (c.values.size() != panel.dates.size()) {
      throw std::invalid_argument("append_columns: '" + c.name + "' has wrong length");
    }
    if (!names.insert(c.name).second) {
      throw std::invalid_argument("append_columns: duplicate column '" + c.name + "'");
    }
    panel.columns.push_back(std::move(c));
  }
}

std::string Scenario::label() const { return set_label() + "_" + std::to_string(window); }

std::string Scenario::set_label() const { return std::to_string(period_start.year()); }

std::size_t Dataset::feature_index(std::string_view name) const {
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i] == name) return i;
  }
  throw std::out_of_range("dataset has no feature '" + std::string(name) + "'");
}

const std::vector<double>& Dataset::column(std::string_view name) const {
  return columns[feature_index(name)];
}

Matrix Dataset::matrix(std::span<const std::string> names) const {
  std::vector<std::size_t> idx;
  idx.reserve(names.size());
  for (const auto& n : names) idx.push_back(feature_index(n));
  Matrix m(rows(), idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j) {
    const auto& col = columns[idx[j]];
    for (std::size_t r = 0; r < rows(); ++r) m(r, j) = col[r];
  }
  return m;
}

Dataset Dataset::select(std::span<const std::string> names) const {
  Dataset out;
  out.dates = dates;
  out.target = target;
  out.window = window;
  for (const auto& n : names) {
    out.features.push_back(n);
    out.columns.push_back(column(n));
    out.categories.emplace(n, categories.at(n));
  }
  return out;
}

Dataset Dataset::slice_rows(std::size_t begin, std::size_t end) const {
  if (begin > end || end > rows()) throw std::out_of_range("slice_rows: bad range");
  Dataset out;
  out.dates.assign(dates.begin() + static_cast<long>(begin), dates.begin() + static_cast<long>(end));
  out.features = features;
  out.categories = categories;
  out.window = window;
  for (const auto& c : columns) {
    out.columns.emplace_back(c.begin() + static_cast<long>(begin), c.begin() + static_cast<long>(end));
  }
  if (target) {
    out.target.emplace(target->begin() + static_cast<long>(begin),
                       target->begin() + static_cast<long>(end));
  }
  return out;
}

Dataset Dataset::canonical() const {
  std::vector<std::string> names = features;
  std::sort(names.begin(), names.end());
  return select(names);
}

SliceResult slice_period(const Panel& panel, const Scenario& scenario) {
  if (panel.dates.empty()) throw std::invalid_argument("slice_period: empty date range");
  const Date start = scenario.period_start;
  if (start < panel.dates.front() || start > panel.dates.back()) {
    throw std::invalid_argument("slice_period: period start " + start.iso() +
                                " outside data range " + panel.dates.front().iso() + ".." +
                                panel.dates.back().iso());
  }
  const auto offset = static_cast<std::size_t>(start - panel.dates.front());

  SliceResult out;
  out.dataset.dates.assign(panel.dates.begin() + static_cast<long>(offset), panel.dates.end());
  for (const auto& col : panel.columns) {
    const auto [first, last] = observed_span(col.values);
    if (first == col.values.size() || first > offset) {
      out.exclusions.push_back(
          {col.name, "late_start",
           first == col.values.size() ? "no observations"
                                      : "first=" + panel.dates[first].iso()});
      continue;
    }
    std::vector<double> values(col.values.begin() + static_cast<long>(offset), col.values.end());
    if (std::any_of(values.begin(), values.end(), [](double v) { return is_missing(v); })) {
      out.exclusions.push_back({col.name, "trailing_gap", "last=" + panel.dates[last].iso()});
      continue;
    }
    out.dataset.features.push_back(col.name);
    out.dataset.columns.push_back(std::move(values));
    out.dataset.categories.emplace(col.name, col.category);
  }
  return out;
}

Dataset make_target(Dataset dataset, std::span<const Point> index_price, int window) {
  if (window <= 0) throw std::invalid_argument("make_target: window must be >= 1");
  std::map<Date, double> price;
  for (const auto& p : index_price) {
    if (!is_missing(p.value)) price.emplace(p.date, p.value);
  }
  std::vector<std::size_t> keep;
  std::vector<double> target;
  for (std::size_t r = 0; r < dataset.rows(); ++r) {
    const auto it = price.find(dataset.dates[r].plus_days(window));
    if (it == price.end()) continue;
    keep.push_back(r);
    target.push_back(it->second);
  }
  if (keep.empty()) {
    throw std::invalid_argument("make_target: index price unavailable for every row at window " +
                                std::to_string(window));
  }
  Dataset out;
  out.features = std::move(dataset.features);
  out.categories = std::move(dataset.categories);
  out.window = window;
  for (std::size_t r : keep) out.dates.push_back(dataset.dates[r]);
  for (auto& c : dataset.columns) {
    std::vector<double> kept;
    kept.reserve(keep.size());
    for (std::size_t r : keep) kept.push_back(c[r]);
    out.columns.push_back(std::move(kept));
  }
  out.target = std::move(target);
  return out;
}

std::pair<Dataset, Dataset> chronological_split(const Dataset& dataset, double holdout) {
  if (!(holdout > 0.0 && holdout < 1.0)) {
    throw std::invalid_argument("chronological_split: holdout must be in (0, 1)");
  }
  const std::size_t n = dataset.rows();
  const auto test = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(static_cast<double>(n) * holdout + 1e-9)));
  if (test >= n) {
    throw std::invalid_argument("chronological_split: " + std::to_string(n) +
                                " rows leave no training data");
  }
  return {dataset.slice_rows(0, n - test), dataset.slice_rows(n - test, n)};
}

} // namespace cryptodiv
