#pragma once

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cryptodiv/calendar.hpp"
#include "cryptodiv/data.hpp"

namespace cryptodiv {

struct IndexParams {
  std::size_t top_n = 100;
  int power = 7;
};

struct Constituent {
  std::string symbol;
  double market_cap = 0.0;
};

struct McapSnapshot {
  Date date;
  std::vector<Constituent> caps; // symbols unique, caps >= 0
};

/// Thrown when the capped market sum is too small for the log scaling.
class IndexDomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// The n largest caps in descending order; equal caps by ascending symbol.
std::vector<Constituent> select_top_n(const McapSnapshot& snapshot, std::size_t n);

/// Sum of the top-n caps, accumulated in descending-cap order.
double top_n_sum(const McapSnapshot& snapshot, std::size_t n);

/// S / (log10 S)^power; requires S > 10.
double index_from_sum(double sum, int power);

double crypto100(const McapSnapshot& snapshot, const IndexParams& params);

struct CalibrationRow {
  int power = 0;
  double objective = 0.0; // mean |ln index - ln reference|
};

struct Calibration {
  int chosen_power = 0;
  std::vector<CalibrationRow> table; // ascending power
  std::size_t overlap_days = 0;
};

/// Picks the power whose index tracks the reference best in mean absolute
/// log-ratio over the common dates. Ties go to the smaller power.
Calibration calibrate_power(std::span<const Point> index_sums,
                            std::span<const Point> reference,
                            std::vector<int> candidate_powers = {5, 6, 7, 8, 9});

inline constexpr std::size_t kMinCalibrationOverlap = 30;

struct IndexRow {
  Date date;
  double sum_mcap = 0.0;
  double value = 0.0;
  int power = 0;
};

/// Long-format `date,asset,market_cap_usd`; one snapshot per date, ascending.
std::vector<McapSnapshot> load_mcaps(const std::filesystem::path& path);

std::vector<IndexRow> compute_index(std::span<const McapSnapshot> snapshots,
                                    const IndexParams& params);

/// `date,sum_mcap,index_value,power`
std::string index_csv(std::span<const IndexRow> rows);

/// Reads an index CSV back as a price series (index_value column).
std::vector<Point> load_index_csv(const std::filesystem::path& path);

/// Two-column `date,<value>` reference price file.
std::vector<Point> load_price_csv(const std::filesystem::path& path);

} // namespace cryptodiv
