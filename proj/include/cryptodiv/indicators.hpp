#pragma once

#include <span>
#include <string>
#include <vector>

#include "cryptodiv/data.hpp"

namespace cryptodiv {

// Rolling indicators over a fully observed daily series. Warm-up positions
// that lack a full window are reported as missing (NaN).

enum class IndicatorKind { SMA, EMA, RSI, Bollinger };

struct IndicatorSpec {
  IndicatorKind kind = IndicatorKind::SMA;
  std::size_t window = 20;
  std::string source;     // metric name, e.g. close-price
  double band_width = 2.0; // Bollinger only
};

std::vector<double> sma(std::span<const double> x, std::size_t n);

/// alpha = 2 / (n + 1), seeded with the SMA of the first n values.
std::vector<double> ema(std::span<const double> x, std::size_t n);

/// Wilder-smoothed RSI; defined from position n. A window with no gains and
/// no losses reads 50.
std::vector<double> rsi(std::span<const double> x, std::size_t n = 14);

struct Bands {
  std::vector<double> mid;
  std::vector<double> upper;
  std::vector<double> lower;
};

/// mid = sma(n); bands at mid +/- k * population stddev over the window.
Bands bollinger(std::span<const double> x, std::size_t n = 20, double k = 2.0);

/// `{KIND}{window}_{source}`, e.g. EMA100_market-cap. Bollinger yields the
/// BBM/BBU/BBL prefixes for mid/upper/lower.
std::string indicator_name(const IndicatorSpec& spec);

struct IndicatorBattery {
  std::vector<std::string> sources = {"close-price", "market-cap", "volume"};
  std::vector<std::size_t> windows = {5, 10, 14, 20, 30, 100, 200};
  std::vector<IndicatorKind> kinds = {IndicatorKind::SMA, IndicatorKind::EMA};
};

/// Computes the battery on Market-category panel columns. Each indicator runs
/// over the observed span of its source; sources absent from the panel are
/// skipped. Output columns are Technical.
std::vector<Column> generate_indicators(const Panel& panel, const IndicatorBattery& battery);

} // namespace cryptodiv
