#include "cryptodiv/indicators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cryptodiv {

namespace {

void require_window(std::size_t n, std::size_t min, const char* what) {
  if (n < min) {
    throw std::invalid_argument(std::string(what) + ": window must be >= " + std::to_string(min));
  }
}

} // namespace

std::vector<double> sma(std::span<const double> x, std::size_t n) {
  require_window(n, 1, "sma");
  std::vector<double> out(x.size(), kMissing);
  for (std::size_t t = n - 1; t < x.size(); ++t) {
    double sum = 0.0;
    for (std::size_t k = t + 1 - n; k <= t; ++k) sum += x[k];
    out[t] = sum / static_cast<double>(n);
  }
  return out;
}

std::vector<double> ema(std::span<const double> x, std::size_t n) {
  require_window(n, 1, "ema");
  std::vector<double> out(x.size(), kMissing);
  if (x.size() < n) return out;
  const double alpha = 2.0 / (static_cast<double>(n) + 1.0);
  double seed = 0.0;
  for (std::size_t k = 0; k < n; ++k) seed += x[k];
  out[n - 1] = seed / static_cast<double>(n);
  for (std::size_t t = n; t < x.size(); ++t) {
    out[t] = alpha * x[t] + (1.0 - alpha) * out[t - 1];
  }
  return out;
}

std::vector<double> rsi(std::span<const double> x, std::size_t n) {
  require_window(n, 1, "rsi");
  std::vector<double> out(x.size(), kMissing);
  if (x.size() <= n) return out;

  auto value = [](double gain, double loss) {
    if (loss == 0.0) return gain == 0.0 ? 50.0 : 100.0;
    return 100.0 - 100.0 / (1.0 + gain / loss);
  };

  double gain = 0.0;
  double loss = 0.0;
  for (std::size_t t = 1; t <= n; ++t) {
    const double d = x[t] - x[t - 1];
    if (d > 0) gain += d;
    else loss -= d;
  }
  gain /= static_cast<double>(n);
  loss /= static_cast<double>(n);
  out[n] = value(gain, loss);
  const double nn = static_cast<double>(n);
  for (std::size_t t = n + 1; t < x.size(); ++t) {
    const double d = x[t] - x[t - 1];
    gain = (gain * (nn - 1.0) + (d > 0 ? d : 0.0)) / nn;
    loss = (loss * (nn - 1.0) + (d < 0 ? -d : 0.0)) / nn;
    out[t] = value(gain, loss);
  }
  return out;
}

Bands bollinger(std::span<const double> x, std::size_t n, double k) {
  require_window(n, 2, "bollinger");
  if (k < 0.0) throw std::invalid_argument("bollinger: band width must be >= 0");
  Bands b;
  b.mid = sma(x, n);
  b.upper.assign(x.size(), kMissing);
  b.lower.assign(x.size(), kMissing);
  for (std::size_t t = n - 1; t < x.size(); ++t) {
    const double mean = b.mid[t];
    double ss = 0.0;
    for (std::size_t j = t + 1 - n; j <= t; ++j) ss += (x[j] - mean) * (x[j] - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n));
    b.upper[t] = mean + k * sd;
    b.lower[t] = mean - k * sd;
  }
  return b;
}

std::string indicator_name(const IndicatorSpec& spec) {
  std::string kind;
  switch (spec.kind) {
    case IndicatorKind::SMA: kind = "SMA"; break;
    case IndicatorKind::EMA: kind = "EMA"; break;
    case IndicatorKind::RSI: kind = "RSI"; break;
    case IndicatorKind::Bollinger: kind = "BBM"; break;
  }
  return kind + std::to_string(spec.window) + "_" + spec.source;
}

std::vector<Column> generate_indicators(const Panel& panel, const IndicatorBattery& battery) {
  std::vector<Column> out;
  for (const auto& source : battery.sources) {
    const Column* col = nullptr;
    for (const auto& c : panel.columns) {
      if (c.name == source && c.category == Category::Market) col = &c;
    }
    if (col == nullptr) continue;

    std::size_t first = col->values.size();
    std::size_t last = 0;
    for (std::size_t i = 0; i < col->values.size(); ++i) {
      if (!is_missing(col->values[i])) {
        if (first == col->values.size()) first = i;
        last = i;
      }
    }
    if (first == col->values.size()) continue;
    const std::span<const double> observed(col->values.data() + first, last - first + 1);

    auto place = [&](std::string name, const std::vector<double>& values) {
      Column c{std::move(name), Category::Technical,
               std::vector<double>(col->values.size(), kMissing)};
      std::copy(values.begin(), values.end(), c.values.begin() + static_cast<long>(first));
      out.push_back(std::move(c));
    };

    for (auto kind : battery.kinds) {
      for (auto w : battery.windows) {
        IndicatorSpec spec{kind, w, source, 2.0};
        switch (kind) {
          case IndicatorKind::SMA: place(indicator_name(spec), sma(observed, w)); break;
          case IndicatorKind::EMA: place(indicator_name(spec), ema(observed, w)); break;
          case IndicatorKind::RSI: place(indicator_name(spec), rsi(observed, w)); break;
          case IndicatorKind::Bollinger: {
            if (w < 2) break;
            auto bands = bollinger(observed, w, spec.band_width);
            const std::string suffix = std::to_string(w) + "_" + source;
            place("BBM" + suffix, bands.mid);
            place("BBU" + suffix, bands.upper);
            place("BBL" + suffix, bands.lower);
            break;
          }
        }
      }
    }
  }
  return out;
}

} // namespace cryptodiv
