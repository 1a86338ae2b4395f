#include "cryptodiv/importance.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "cryptodiv/parallel.hpp"
#include "cryptodiv/random.hpp"

namespace cryptodiv {

std::string_view method_tag(ImportanceMethod m) {
  switch (m) {
    case ImportanceMethod::Pearson: return "pearson";
    case ImportanceMethod::MDI: return "mdi";
    case ImportanceMethod::PFI: return "pfi";
    case ImportanceMethod::Shapley: return "shapley";
  }
  return "unknown";
}

double ImportanceReport::score(std::string_view feature) const {
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i] == feature) return scores[i];
  }
  throw std::out_of_range("report has no feature '" + std::string(feature) + "'");
}

std::size_t ImportanceReport::rank_of(std::string_view feature) const {
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    if (ranking[i] == feature) return i;
  }
  throw std::out_of_range("report has no feature '" + std::string(feature) + "'");
}

std::vector<std::string> rank_features(std::span<const std::string> features,
                                       std::span<const double> scores) {
  std::vector<std::size_t> order(features.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return features[a] < features[b];
  });
  std::vector<std::string> out;
  out.reserve(order.size());
  for (auto i : order) out.push_back(features[i]);
  return out;
}

ImportanceReport make_report(ImportanceMethod method, std::vector<std::string> features,
                             std::vector<double> scores, std::string model) {
  if (features.size() != scores.size()) throw std::invalid_argument("report: size mismatch");
  ImportanceReport r;
  r.method = method;
  r.model = std::move(model);
  r.ranking = rank_features(features, scores);
  r.features = std::move(features);
  r.scores = std::move(scores);
  return r;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("pearson: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedCorrelation("pearson: constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double pearson_or_zero(std::span<const double> x, std::span<const double> y) {
  try {
    return pearson(x, y);
  } catch (const UndefinedCorrelation&) {
    return 0.0;
  }
}

ImportanceReport pearson_report(const Dataset& dataset) {
  if (!dataset.target) throw std::invalid_argument("pearson_report: dataset has no target");
  std::vector<double> scores;
  scores.reserve(dataset.feature_count());
  for (const auto& col : dataset.columns) {
    scores.push_back(std::abs(pearson_or_zero(col, *dataset.target)));
  }
  return make_report(ImportanceMethod::Pearson, dataset.features, std::move(scores));
}

ImportanceReport mdi(const TreeEnsemble& model, std::span<const std::string> names) {
  if (!model.node_stats) throw std::invalid_argument("mdi: model has no node statistics");
  if (names.size() != model.n_features) throw std::invalid_argument("mdi: name count mismatch");
  std::vector<double> total(model.n_features, 0.0);
  for (const auto& tree : model.trees) {
    if (tree.nodes.empty()) continue;
    const double root = static_cast<double>(tree.nodes[0].samples);
    for (const auto& node : tree.nodes) {
      if (node.is_leaf()) continue;
      const auto& l = tree.nodes[static_cast<std::size_t>(node.left)];
      const auto& r = tree.nodes[static_cast<std::size_t>(node.right)];
      const double n = static_cast<double>(node.samples);
      const double child = (static_cast<double>(l.samples) * l.impurity +
                            static_cast<double>(r.samples) * r.impurity) /
                           n;
      total[static_cast<std::size_t>(node.feature)] +=
          (n / root) * std::max(0.0, node.impurity - child);
    }
  }
  const double trees = static_cast<double>(std::max<std::size_t>(1, model.trees.size()));
  double sum = 0.0;
  for (auto& v : total) {
    v /= trees;
    sum += v;
  }
  if (sum > 0.0) {
    for (auto& v : total) v /= sum;
  }
  return make_report(ImportanceMethod::MDI, {names.begin(), names.end()}, std::move(total),
                     std::string(ensemble_tag(model.kind)));
}

namespace {

ImportanceReport pfi_impl(const BatchPredictor& model, const Matrix& x, std::span<const double> y,
                          std::span<const std::string> names, std::size_t repeats,
                          std::uint64_t seed, const std::vector<bool>* used) {
  if (repeats < 1) throw std::invalid_argument("pfi: repeats must be >= 1");
  if (x.rows() != y.size() || names.size() != x.cols()) {
    throw std::invalid_argument("pfi: dimension mismatch");
  }
  const double baseline = mse(y, model(x));
  std::vector<double> scores(x.cols(), 0.0);
  parallel_for(x.cols(), [&](std::size_t j) {
    if (used != nullptr && !(*used)[j]) return;
    Matrix work = x;
    const auto original = x.column(j);
    std::vector<std::size_t> perm(x.rows());
    double total = 0.0;
    for (std::size_t rep = 0; rep < repeats; ++rep) {
      std::iota(perm.begin(), perm.end(), 0);
      Rng rng(derive_seed(seed, {stable_hash(names[j]), rep}));
      rng.shuffle(perm);
      for (std::size_t r = 0; r < x.rows(); ++r) work(r, j) = original[perm[r]];
      total += mse(y, model(work)) - baseline;
    }
    scores[j] = total / static_cast<double>(repeats);
  });
  auto report = make_report(ImportanceMethod::PFI, {names.begin(), names.end()}, std::move(scores));
  report.repeats = repeats;
  report.seed = seed;
  return report;
}

ShapleyResult finish(Matrix phi, Matrix se, double base, std::size_t perms,
                     std::span<const std::string> names) {
  std::vector<double> global(phi.cols(), 0.0);
  for (std::size_t r = 0; r < phi.rows(); ++r) {
    for (std::size_t j = 0; j < phi.cols(); ++j) global[j] += std::abs(phi(r, j));
  }
  for (auto& g : global) g /= static_cast<double>(std::max<std::size_t>(1, phi.rows()));
  ShapleyResult out;
  out.report = make_report(ImportanceMethod::Shapley, {names.begin(), names.end()},
                           std::move(global));
  out.report.repeats = perms;
  out.phi = std::move(phi);
  out.std_error = std::move(se);
  out.base_value = base;
  out.permutations = perms;
  return out;
}

void check_shapley_inputs(const Matrix& background, const Matrix& explain,
                          std::span<const std::string> names) {
  if (background.rows() == 0) throw std::invalid_argument("shapley: empty background");
  if (background.cols() != explain.cols() || names.size() != explain.cols()) {
    throw std::invalid_argument("shapley: dimension mismatch");
  }
}

double background_mean(const RowPredictor& model, const Matrix& background) {
  double sum = 0.0;
  for (std::size_t b = 0; b < background.rows(); ++b) sum += model(background.row(b));
  return sum / static_cast<double>(background.rows());
}

} // namespace

ImportanceReport pfi(const BatchPredictor& model, const Matrix& x, std::span<const double> y,
                     std::span<const std::string> names, std::size_t repeats, std::uint64_t seed) {
  return pfi_impl(model, x, y, names, repeats, seed, nullptr);
}

ImportanceReport pfi(const TreeEnsemble& model, const Matrix& x, std::span<const double> y,
                     std::span<const std::string> names, std::size_t repeats, std::uint64_t seed) {
  const auto used = model.used_features();
  auto report = pfi_impl([&](const Matrix& m) { return predict(model, m); }, x, y, names, repeats,
                         seed, &used);
  report.model = std::string(ensemble_tag(model.kind));
  return report;
}

RowPredictor row_predictor(const TreeEnsemble& model) {
  return [&model](std::span<const double> row) { return model.predict_row(row); };
}

ShapleyResult shapley_exact(const RowPredictor& model, const Matrix& background,
                            const Matrix& explain, std::span<const std::string> names) {
  check_shapley_inputs(background, explain, names);
  const std::size_t p = explain.cols();
  if (p > kMaxExactShapleyFeatures) {
    throw std::invalid_argument("shapley_exact: " + std::to_string(p) +
                                " features exceed the exact limit of " +
                                std::to_string(kMaxExactShapleyFeatures) +
                                "; use shapley_sampled");
  }
  const std::size_t coalitions = std::size_t{1} << p;

  // weight[s] = s! (p - s - 1)! / p!
  std::vector<double> weight(p, 0.0);
  for (std::size_t s = 0; s < p; ++s) {
    weight[s] = std::exp(std::lgamma(static_cast<double>(s) + 1.0) +
                         std::lgamma(static_cast<double>(p - s)) -
                         std::lgamma(static_cast<double>(p) + 1.0));
  }

  Matrix phi(explain.rows(), p);
  parallel_for(explain.rows(), [&](std::size_t i) {
    const auto x = explain.row(i);
    std::vector<double> value(coalitions, 0.0);
    std::vector<double> z(p);
    for (std::size_t mask = 0; mask < coalitions; ++mask) {
      double sum = 0.0;
      for (std::size_t b = 0; b < background.rows(); ++b) {
        const auto bg = background.row(b);
        for (std::size_t j = 0; j < p; ++j) z[j] = (mask >> j) & 1U ? x[j] : bg[j];
        sum += model(z);
      }
      value[mask] = sum / static_cast<double>(background.rows());
    }
    for (std::size_t j = 0; j < p; ++j) {
      const std::size_t bit = std::size_t{1} << j;
      double acc = 0.0;
      for (std::size_t mask = 0; mask < coalitions; ++mask) {
        if (mask & bit) continue;
        const auto size = static_cast<std::size_t>(std::popcount(mask));
        acc += weight[size] * (value[mask | bit] - value[mask]);
      }
      phi(i, j) = acc;
    }
  });
  return finish(std::move(phi), Matrix(explain.rows(), p), background_mean(model, background), 0,
                names);
}

ShapleyResult shapley_sampled(const RowPredictor& model, const Matrix& background,
                              const Matrix& explain, std::span<const std::string> names,
                              std::size_t n_permutations, std::uint64_t seed) {
  check_shapley_inputs(background, explain, names);
  if (n_permutations < 1) throw std::invalid_argument("shapley_sampled: need >= 1 permutation");
  const std::size_t p = explain.cols();
  const double nb = static_cast<double>(background.rows());
  const double np = static_cast<double>(n_permutations);

  Matrix phi(explain.rows(), p);
  Matrix se(explain.rows(), p);
  parallel_for(explain.rows(), [&](std::size_t i) {
    const auto x = explain.row(i);
    std::vector<double> sum(p, 0.0), sum_sq(p, 0.0), contrib(p);
    std::vector<std::size_t> order(p);
    std::vector<double> z(p);
    for (std::size_t m = 0; m < n_permutations; ++m) {
      std::iota(order.begin(), order.end(), 0);
      Rng rng(derive_seed(seed, {i, m}));
      rng.shuffle(order);
      std::fill(contrib.begin(), contrib.end(), 0.0);
      for (std::size_t b = 0; b < background.rows(); ++b) {
        const auto bg = background.row(b);
        std::copy(bg.begin(), bg.end(), z.begin());
        double prev = model(z);
        for (std::size_t j : order) {
          z[j] = x[j];
          const double cur = model(z);
          contrib[j] += cur - prev;
          prev = cur;
        }
      }
      for (std::size_t j = 0; j < p; ++j) {
        const double c = contrib[j] / nb;
        sum[j] += c;
        sum_sq[j] += c * c;
      }
    }
    for (std::size_t j = 0; j < p; ++j) {
      const double mean = sum[j] / np;
      phi(i, j) = mean;
      if (n_permutations > 1) {
        const double var = std::max(0.0, (sum_sq[j] - np * mean * mean) / (np - 1.0));
        se(i, j) = std::sqrt(var / np);
      }
    }
  });
  return finish(std::move(phi), std::move(se), background_mean(model, background), n_permutations,
                names);
}

Matrix subsample_rows(const Matrix& x, std::size_t max_rows, std::uint64_t seed) {
  if (x.rows() <= max_rows) return x;
  Rng rng(seed);
  auto rows = rng.sample_without_replacement(x.rows(), max_rows);
  std::sort(rows.begin(), rows.end());
  return x.select_rows(rows);
}

} // namespace cryptodiv
