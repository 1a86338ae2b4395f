#include "cryptodiv/fra.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace cryptodiv {

void FraConfig::validate() const {
  if (!(corr_start >= 0.0 && corr_start <= 1.0)) {
    throw std::invalid_argument("fra: corr_start must be in [0, 1]");
  }
  if (!(corr_step > 0.0)) throw std::invalid_argument("fra: corr_step must be > 0");
  if (target_count < 1) throw std::invalid_argument("fra: target_count must be >= 1");
  if (top_k_union < 1 || top_k_union > target_count) {
    throw std::invalid_argument("fra: top_k_union must be in [1, target_count]");
  }
  if (pfi_repeats < 1) throw std::invalid_argument("fra: pfi_repeats must be >= 1");
  if (max_iterations < 1) throw std::invalid_argument("fra: max_iterations must be >= 1");
  if (tune_first && (rf_grid.empty() || gbt_grid.empty())) {
    throw std::invalid_argument("fra: tune_first needs non-empty rf and gbt grids");
  }
  rf.validate();
  gbt.validate();
}

std::vector<std::string> bottom_half(const ImportanceReport& report) {
  if (report.ranking.empty()) throw std::invalid_argument("bottom_half: empty report");
  const std::size_t half = report.ranking.size() / 2;
  return {report.ranking.end() - static_cast<long>(half), report.ranking.end()};
}

std::vector<std::string> mean_rank_order(const std::vector<ImportanceReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("mean_rank_order: no reports");
  std::vector<std::pair<double, std::string>> scored;
  for (const auto& name : reports.front().ranking) {
    double total = 0.0;
    for (const auto& r : reports) total += static_cast<double>(r.rank_of(name));
    scored.emplace_back(total / static_cast<double>(reports.size()), name);
  }
  std::sort(scored.begin(), scored.end());
  std::vector<std::string> out;
  out.reserve(scored.size());
  for (auto& [rank, name] : scored) out.push_back(std::move(name));
  return out;
}

namespace {

std::vector<ImportanceReport> evaluate(const Dataset& dataset,
                                       const std::vector<std::string>& features,
                                       const FraConfig& config, const EnsembleParams& rf,
                                       const EnsembleParams& gbt, std::size_t round) {
  const Matrix x = dataset.matrix(features);
  const auto& y = *dataset.target;

  EnsembleParams rf_params = rf;
  EnsembleParams gbt_params = gbt;
  rf_params.kind = EnsembleKind::RandomForest;
  gbt_params.kind = EnsembleKind::GradientBoost;
  rf_params.seed = derive_seed(config.seed, {round, 0});
  gbt_params.seed = derive_seed(config.seed, {round, 1});
  const auto rf_model = fit_forest(x, y, rf_params);
  const auto gbt_model = fit_gbt(x, y, gbt_params);

  std::vector<ImportanceReport> reports;
  reports.push_back(mdi(rf_model, features));
  reports.push_back(mdi(gbt_model, features));
  reports.push_back(pfi(rf_model, x, y, features, config.pfi_repeats,
                        derive_seed(config.seed, {round, 2})));
  reports.push_back(pfi(gbt_model, x, y, features, config.pfi_repeats,
                        derive_seed(config.seed, {round, 3})));
  return reports;
}

} // namespace

ReducedFeatureSet fra_reduce(const Dataset& dataset, const FraConfig& config) {
  if (!dataset.target) throw std::invalid_argument("fra_reduce: dataset has no target");
  if (dataset.feature_count() == 0) throw std::invalid_argument("fra_reduce: no features");
  config.validate();

  ReducedFeatureSet result;
  result.original = dataset.features;
  std::sort(result.original.begin(), result.original.end());
  result.rf = config.rf;
  result.gbt = config.gbt;

  if (config.tune_first) {
    const Matrix x = dataset.matrix(result.original);
    result.rf = config.rf_grid[grid_search_cv(x, *dataset.target, config.rf_grid,
                                              config.cv_folds, config.seed)
                                   .chosen];
    result.gbt = config.gbt_grid[grid_search_cv(x, *dataset.target, config.gbt_grid,
                                                config.cv_folds, config.seed)
                                     .chosen];
  }

  std::vector<std::string> current = result.original;
  std::map<std::string, double> abs_corr;
  for (const auto& name : current) {
    abs_corr[name] = std::abs(pearson_or_zero(dataset.column(name), *dataset.target));
  }

  double threshold = config.corr_start;
  while (current.size() > config.target_count && result.audit.size() < config.max_iterations) {
    FraIteration it;
    it.iteration = result.audit.size();
    it.threshold = threshold;
    it.features_before = current.size();
    it.reports = evaluate(dataset, current, config, result.rf, result.gbt, it.iteration);

    std::map<std::string, int> bottom_votes;
    for (const auto& r : it.reports) {
      for (const auto& name : bottom_half(r)) ++bottom_votes[name];
    }
    for (const auto& name : current) {
      it.abs_correlation[name] = abs_corr[name];
      if (bottom_votes[name] == static_cast<int>(it.reports.size()) && abs_corr[name] < threshold) {
        it.removed.push_back(name);
      }
    }
    if (it.removed.empty() && threshold > 1.0) {
      it.removed.push_back(mean_rank_order(it.reports).back());
      it.forced = true;
    }

    const std::set<std::string> gone(it.removed.begin(), it.removed.end());
    std::erase_if(current, [&](const std::string& n) { return gone.contains(n); });
    result.audit.push_back(std::move(it));
    threshold += config.corr_step;
  }
  result.forced_stop = current.size() > config.target_count;

  result.final_reports =
      evaluate(dataset, current, config, result.rf, result.gbt, result.audit.size());
  result.survivors = mean_rank_order(result.final_reports);
  return result;
}

FinalVector final_vector(const ReducedFeatureSet& fra, const ImportanceReport& shapley,
                         std::size_t k, std::size_t overlap_k) {
  FinalVector out;
  out.overlap_k = overlap_k;
  std::set<std::string> seen;
  const std::size_t fra_k = std::min(k, fra.survivors.size());
  const std::size_t shap_k = std::min(k, shapley.ranking.size());
  for (std::size_t i = 0; i < fra_k; ++i) {
    if (seen.insert(fra.survivors[i]).second) out.features.push_back(fra.survivors[i]);
  }
  for (std::size_t i = 0; i < shap_k; ++i) {
    if (seen.insert(shapley.ranking[i]).second) out.features.push_back(shapley.ranking[i]);
  }
  const std::set<std::string> survivors(fra.survivors.begin(), fra.survivors.end());
  const std::size_t top = std::min(overlap_k, shapley.ranking.size());
  for (std::size_t i = 0; i < top; ++i) out.overlap += survivors.contains(shapley.ranking[i]) ? 1 : 0;
  return out;
}

} // namespace cryptodiv
