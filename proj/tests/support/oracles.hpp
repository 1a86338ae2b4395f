#pragma once

// Direct-definition reference implementations. They share no code with the
// library and favour obviousness over speed.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "cryptodiv/index.hpp"
#include "cryptodiv/models.hpp"

namespace cryptodiv::oracle {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline std::vector<double> sma(const std::vector<double>& x, std::size_t n) {
  std::vector<double> out(x.size(), kNaN);
  for (std::size_t t = n - 1; t < x.size(); ++t) {
    double s = 0.0;
    for (std::size_t k = t + 1 - n; k <= t; ++k) s += x[k];
    out[t] = s / static_cast<double>(n);
  }
  return out;
}

// Closed form: e[t] = (1-a)^(t-n+1) * seed + sum_{k=n}^{t} a (1-a)^(t-k) x[k].
inline std::vector<double> ema(const std::vector<double>& x, std::size_t n) {
  std::vector<double> out(x.size(), kNaN);
  if (x.size() < n) return out;
  const double a = 2.0 / (static_cast<double>(n) + 1.0);
  double seed = 0.0;
  for (std::size_t k = 0; k < n; ++k) seed += x[k];
  seed /= static_cast<double>(n);
  for (std::size_t t = n - 1; t < x.size(); ++t) {
    double v = std::pow(1.0 - a, static_cast<double>(t - (n - 1))) * seed;
    for (std::size_t k = n; k <= t; ++k) v += a * std::pow(1.0 - a, static_cast<double>(t - k)) * x[k];
    out[t] = v;
  }
  return out;
}

// Wilder RSI via explicit gain/loss arrays.
inline std::vector<double> rsi(const std::vector<double>& x, std::size_t n) {
  std::vector<double> out(x.size(), kNaN);
  if (x.size() <= n) return out;
  std::vector<double> gain(x.size(), 0.0), loss(x.size(), 0.0);
  for (std::size_t t = 1; t < x.size(); ++t) {
    const double d = x[t] - x[t - 1];
    gain[t] = d > 0 ? d : 0.0;
    loss[t] = d < 0 ? -d : 0.0;
  }
  std::vector<double> ag(x.size()), al(x.size());
  ag[n] = std::accumulate(gain.begin() + 1, gain.begin() + static_cast<long>(n) + 1, 0.0) /
          static_cast<double>(n);
  al[n] = std::accumulate(loss.begin() + 1, loss.begin() + static_cast<long>(n) + 1, 0.0) /
          static_cast<double>(n);
  for (std::size_t t = n + 1; t < x.size(); ++t) {
    ag[t] = (ag[t - 1] * static_cast<double>(n - 1) + gain[t]) / static_cast<double>(n);
    al[t] = (al[t - 1] * static_cast<double>(n - 1) + loss[t]) / static_cast<double>(n);
  }
  for (std::size_t t = n; t < x.size(); ++t) {
    if (ag[t] == 0.0 && al[t] == 0.0) {
      out[t] = 50.0;
    } else if (al[t] == 0.0) {
      out[t] = 100.0;
    } else {
      out[t] = 100.0 - 100.0 / (1.0 + ag[t] / al[t]);
    }
  }
  return out;
}

struct Bands {
  std::vector<double> mid, upper, lower;
};

inline Bands bollinger(const std::vector<double>& x, std::size_t n, double k) {
  Bands b{std::vector<double>(x.size(), kNaN), std::vector<double>(x.size(), kNaN),
          std::vector<double>(x.size(), kNaN)};
  for (std::size_t t = n - 1; t < x.size(); ++t) {
    double m = 0.0;
    for (std::size_t j = t + 1 - n; j <= t; ++j) m += x[j];
    m /= static_cast<double>(n);
    double v = 0.0;
    for (std::size_t j = t + 1 - n; j <= t; ++j) v += (x[j] - m) * (x[j] - m);
    const double sd = std::sqrt(v / static_cast<double>(n));
    b.mid[t] = m;
    b.upper[t] = m + k * sd;
    b.lower[t] = m - k * sd;
  }
  return b;
}

inline double mse(const std::vector<double>& y, const std::vector<double>& yhat) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - yhat[i]) * (y[i] - yhat[i]);
  return s / static_cast<double>(y.size());
}

inline std::vector<Constituent> top_n(std::vector<Constituent> caps, std::size_t n) {
  std::sort(caps.begin(), caps.end(), [](const Constituent& a, const Constituent& b) {
    return a.market_cap > b.market_cap || (a.market_cap == b.market_cap && a.symbol < b.symbol);
  });
  if (caps.size() > n) caps.resize(n);
  return caps;
}

struct CvOracle {
  std::vector<double> mean_mse;
  std::size_t chosen = 0;
};

// Naive k-fold CV: block f holds rows floor(f*n/k) <= i < floor((f+1)*n/k).
inline CvOracle cross_validate(const Matrix& x, const std::vector<double>& y,
                               const std::vector<EnsembleParams>& grid, std::size_t k,
                               std::uint64_t seed) {
  const std::size_t n = y.size();
  CvOracle out;
  for (const auto& candidate : grid) {
    EnsembleParams p = candidate;
    p.seed = seed;
    double total = 0.0;
    for (std::size_t f = 0; f < k; ++f) {
      std::vector<std::size_t> train, test;
      for (std::size_t i = 0; i < n; ++i) {
        const bool in_fold = i >= f * n / k && i < (f + 1) * n / k;
        (in_fold ? test : train).push_back(i);
      }
      std::vector<double> ytr, yte;
      for (auto i : train) ytr.push_back(y[i]);
      for (auto i : test) yte.push_back(y[i]);
      const auto model = fit_ensemble(x.select_rows(train), ytr, p);
      const Matrix xte = x.select_rows(test);
      std::vector<double> pred;
      for (std::size_t r = 0; r < xte.rows(); ++r) pred.push_back(model.predict_row(xte.row(r)));
      total += mse(yte, pred);
    }
    out.mean_mse.push_back(total / static_cast<double>(k));
  }
  for (std::size_t c = 1; c < out.mean_mse.size(); ++c) {
    if (out.mean_mse[c] < out.mean_mse[out.chosen]) out.chosen = c;
  }
  return out;
}

}  // namespace cryptodiv::oracle
