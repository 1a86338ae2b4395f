#include "cryptodiv/index.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "cryptodiv/csv.hpp"

namespace cryptodiv {

std::vector<Constituent> select_top_n(const McapSnapshot& snapshot, std::size_t n) {
  std::vector<Constituent> sorted = snapshot.caps;
  std::sort(sorted.begin(), sorted.end(), [](const Constituent& a, const Constituent& b) {
    if (a.market_cap != b.market_cap) return a.market_cap > b.market_cap;
    return a.symbol < b.symbol;
  });
  if (sorted.size() > n) sorted.resize(n);
  return sorted;
}

double top_n_sum(const McapSnapshot& snapshot, std::size_t n) {
  double sum = 0.0;
  for (const auto& c : select_top_n(snapshot, n)) sum += c.market_cap;
  return sum;
}

double index_from_sum(double sum, int power) {
  if (power < 1) throw std::invalid_argument("index power must be >= 1");
  if (!(sum > 10.0)) {
    throw IndexDomainError("market-cap sum must exceed 10 (got " + format_number(sum) + ")");
  }
  return sum / std::pow(std::log10(sum), power);
}

double crypto100(const McapSnapshot& snapshot, const IndexParams& params) {
  if (params.top_n < 1) throw std::invalid_argument("top_n must be >= 1");
  return index_from_sum(top_n_sum(snapshot, params.top_n), params.power);
}

Calibration calibrate_power(std::span<const Point> index_sums, std::span<const Point> reference,
                            std::vector<int> candidate_powers) {
  if (candidate_powers.empty()) throw std::invalid_argument("calibrate_power: no candidates");
  std::sort(candidate_powers.begin(), candidate_powers.end());
  candidate_powers.erase(std::unique(candidate_powers.begin(), candidate_powers.end()),
                         candidate_powers.end());

  std::map<Date, double> ref;
  for (const auto& p : reference) {
    if (!is_missing(p.value)) ref.emplace(p.date, p.value);
  }
  std::vector<std::pair<double, double>> pairs; // (sum, ln reference)
  for (const auto& p : index_sums) {
    if (is_missing(p.value)) continue;
    const auto it = ref.find(p.date);
    if (it == ref.end()) continue;
    if (!(it->second > 0.0)) {
      throw std::invalid_argument("calibrate_power: reference price must be positive on " +
                                  p.date.iso());
    }
    index_from_sum(p.value, 1); // domain check
    pairs.emplace_back(p.value, std::log(it->second));
  }
  if (pairs.size() < kMinCalibrationOverlap) {
    throw std::invalid_argument("calibrate_power: overlap of " + std::to_string(pairs.size()) +
                                " days, need at least " +
                                std::to_string(kMinCalibrationOverlap));
  }

  Calibration out;
  out.overlap_days = pairs.size();
  double best = 0.0;
  for (int power : candidate_powers) {
    double total = 0.0;
    for (const auto& [sum, ln_ref] : pairs) {
      total += std::abs(std::log(index_from_sum(sum, power)) - ln_ref);
    }
    const double objective = total / static_cast<double>(pairs.size());
    out.table.push_back({power, objective});
    if (out.table.size() == 1 || objective < best) {
      best = objective;
      out.chosen_power = power;
    }
  }
  return out;
}

std::vector<McapSnapshot> load_mcaps(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  const auto src = path.string();
  const std::size_t date_col = table.column("date", src);
  const std::size_t asset_col = table.column("asset", src);
  const std::size_t cap_col = table.column("market_cap_usd", src);

  std::map<Date, McapSnapshot> by_date;
  std::map<Date, std::set<std::string>> symbols;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = table.line_numbers[r];
    Date date;
    try {
      date = Date::parse(row[date_col]);
    } catch (const std::invalid_argument& e) {
      throw InputError(src + ":" + std::to_string(line) + ": " + e.what());
    }
    const double cap = parse_cell(row[cap_col], path, line);
    if (is_missing(cap)) continue;
    if (cap < 0.0) {
      throw InputError(src + ":" + std::to_string(line) + ": negative market cap");
    }
    if (!symbols[date].insert(row[asset_col]).second) {
      throw InputError(src + ":" + std::to_string(line) + ": duplicate asset '" +
                       row[asset_col] + "' on " + date.iso());
    }
    auto& snap = by_date[date];
    snap.date = date;
    snap.caps.push_back({row[asset_col], cap});
  }
  std::vector<McapSnapshot> out;
  out.reserve(by_date.size());
  for (auto& [d, snap] : by_date) out.push_back(std::move(snap));
  return out;
}

std::vector<IndexRow> compute_index(std::span<const McapSnapshot> snapshots,
                                    const IndexParams& params) {
  std::vector<IndexRow> rows;
  rows.reserve(snapshots.size());
  for (const auto& snap : snapshots) {
    const double sum = top_n_sum(snap, params.top_n);
    double value;
    try {
      value = index_from_sum(sum, params.power);
    } catch (const IndexDomainError& e) {
      throw IndexDomainError(snap.date.iso() + ": " + e.what());
    }
    rows.push_back({snap.date, sum, value, params.power});
  }
  return rows;
}

std::string index_csv(std::span<const IndexRow> rows) {
  std::string out = "date,sum_mcap,index_value,power\n";
  for (const auto& r : rows) {
    out += csv_line({r.date.iso(), format_number(r.sum_mcap), format_number(r.value),
                     std::to_string(r.power)});
  }
  return out;
}

namespace {

std::vector<Point> load_two_column(const std::filesystem::path& path, std::size_t value_col,
                                   const CsvTable& table) {
  const auto src = path.string();
  const std::size_t date_col = table.column("date", src);
  std::vector<Point> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    Date date;
    try {
      date = Date::parse(table.rows[r][date_col]);
    } catch (const std::invalid_argument& e) {
      throw InputError(src + ":" + std::to_string(table.line_numbers[r]) + ": " + e.what());
    }
    out.push_back({date, parse_cell(table.rows[r][value_col], path, table.line_numbers[r])});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Point& a, const Point& b) { return a.date < b.date; });
  return out;
}

} // namespace

std::vector<Point> load_index_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  return load_two_column(path, table.column("index_value", path.string()), table);
}

std::vector<Point> load_price_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  if (table.header.size() != 2) {
    throw InputError(path.string() + ": expected two columns 'date,<price>'");
  }
  const std::size_t date_col = table.column("date", path.string());
  return load_two_column(path, date_col == 0 ? 1 : 0, table);
}

} // namespace cryptodiv
