#include "cryptodiv/experiments.hpp"

#include <algorithm>
#include <functional>
#include <set>

namespace cryptodiv {

PreparedCorpus prepare_corpus(const Corpus& corpus, std::vector<Point> index_price,
                              const ExperimentConfig& config) {
  auto clean = clean_corpus(corpus, config.cleaning);
  if (config.indicators_enabled) {
    append_columns(clean.panel, generate_indicators(clean.panel, config.indicators));
  }
  return {std::move(clean.panel), std::move(clean.drop_log), std::move(clean.imputation_log),
          std::move(index_price)};
}

std::map<Category, double> contribution_factors(
    const std::vector<std::string>& final_features,
    const std::map<std::string, Category>& categories,
    const std::map<Category, std::size_t>& candidate_counts) {
  std::map<Category, std::size_t> survivors;
  for (const auto& f : final_features) {
    const auto it = categories.find(f);
    if (it == categories.end()) {
      throw std::invalid_argument("contribution_factors: feature '" + f + "' has no category");
    }
    ++survivors[it->second];
  }
  std::map<Category, double> out;
  for (const auto& [cat, candidates] : candidate_counts) {
    if (candidates == 0) continue;
    const std::size_t kept = survivors.contains(cat) ? survivors.at(cat) : 0;
    if (kept > candidates) {
      throw std::invalid_argument("contribution_factors: more survivors than candidates in " +
                                  std::string(category_tag(cat)));
    }
    out[cat] = static_cast<double>(kept) / static_cast<double>(candidates);
  }
  return out;
}

HorizonGroup merge_group(const std::string& label, const std::vector<int>& windows,
                         const std::map<int, ImportanceMap>& per_window) {
  HorizonGroup group{label, windows, {}};
  std::map<std::string, std::pair<double, int>> acc;
  for (int w : windows) {
    const auto it = per_window.find(w);
    if (it == per_window.end()) {
      throw std::invalid_argument("group " + label + ": missing window " + std::to_string(w));
    }
    for (const auto& [name, value] : it->second) {
      auto& [sum, count] = acc[name];
      sum += value;
      ++count;
    }
  }
  for (const auto& [name, sc] : acc) group.importance[name] = sc.first / sc.second;
  return group;
}

std::pair<HorizonGroup, HorizonGroup> group_horizons(const std::map<int, ImportanceMap>& per_window) {
  return {merge_group("ShortTerm", kShortTermWindows, per_window),
          merge_group("LongTerm", kLongTermWindows, per_window)};
}

namespace {

RankedFeatures ranked(const ImportanceMap& map, const std::function<bool(const std::string&)>& keep,
                      std::size_t k) {
  RankedFeatures all;
  for (const auto& [name, value] : map) {
    if (keep(name)) all.emplace_back(name, value);
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

} // namespace

RankedFeatures top_k(const HorizonGroup& group, std::size_t k) {
  return ranked(group.importance, [](const std::string&) { return true; }, k);
}

RankedFeatures unique_top_k(const HorizonGroup& a, const HorizonGroup& b, std::size_t k) {
  return ranked(a.importance, [&](const std::string& n) { return !b.importance.contains(n); }, k);
}

double improvement_percent(double mse_category, double mse_diverse) {
  if (mse_diverse == 0.0) {
    throw std::domain_error("improvement: diverse MSE is exactly 0; the target leaks into the "
                            "features");
  }
  return (mse_category - mse_diverse) / mse_diverse * 100.0;
}

ImprovementResult improvement(const EnsembleParams& params, const Dataset& train,
                              const Dataset& test, const std::vector<std::string>& final_features,
                              const std::map<Category, std::vector<std::string>>& partitions) {
  if (!train.target || !test.target) throw std::invalid_argument("improvement: missing target");
  auto score = [&](const std::vector<std::string>& features, TreeEnsemble* keep) {
    const auto model = fit_ensemble(train.matrix(features), *train.target, params);
    const double err = mse(*test.target, predict(model, test.matrix(features)));
    if (keep) *keep = model;
    return err;
  };

  ImprovementResult out;
  out.mse_diverse = score(final_features, &out.diverse_model);
  if (out.mse_diverse == 0.0) {
    throw std::domain_error("improvement: diverse MSE is exactly 0; the target leaks into the "
                            "features");
  }
  double total = 0.0;
  for (const auto& [cat, features] : partitions) {
    if (features.empty()) {
      throw std::invalid_argument("improvement: empty partition for " +
                                  std::string(category_tag(cat)));
    }
    CategoryArm arm{cat, features.size(), score(features, nullptr), 0.0};
    arm.improvement = improvement_percent(arm.mse, out.mse_diverse);
    total += arm.improvement;
    out.arms.push_back(arm);
  }
  if (!out.arms.empty()) out.mean_improvement = total / static_cast<double>(out.arms.size());
  return out;
}

ModelSummary summarize(const std::string& role, const TreeEnsemble& model) {
  ModelSummary s;
  s.role = role;
  s.params = model.params;
  s.trees = model.trees.size();
  double leaves = 0.0;
  for (const auto& t : model.trees) {
    s.max_depth = std::max(s.max_depth, t.depth());
    leaves += static_cast<double>(t.leaves());
  }
  if (!model.trees.empty()) s.mean_leaves = leaves / static_cast<double>(model.trees.size());
  return s;
}

std::uint64_t scenario_seed(std::uint64_t seed, const Scenario& scenario) {
  return derive_seed(seed, {static_cast<std::uint64_t>(scenario.period_start.serial()),
                            static_cast<std::uint64_t>(scenario.window)});
}

ScenarioRun run_scenario(const PreparedCorpus& corpus, const Scenario& scenario,
                         const ExperimentConfig& config) {
  const std::string label = scenario.label();
  auto stage = [&](const char* name, auto&& fn) {
    try {
      return fn();
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(label, name, e.what());
    }
  };

  const std::uint64_t seed = scenario_seed(config.seed, scenario);
  ScenarioRun run;
  ScenarioResult& res = run.result;
  res.scenario = scenario;

  auto sliced = stage("slice_period", [&] { return slice_period(corpus.panel, scenario); });
  res.exclusions = std::move(sliced.exclusions);
  const Dataset dataset = stage("make_target", [&] {
    if (sliced.dataset.feature_count() == 0) {
      throw std::invalid_argument("no features survive the period slice");
    }
    return make_target(std::move(sliced.dataset), corpus.index_price, scenario.window)
        .canonical();
  });
  auto [train, test] =
      stage("split", [&] { return chronological_split(dataset, config.holdout); });
  res.rows = dataset.rows();
  res.train_rows = train.rows();
  res.test_rows = test.rows();
  res.candidate_features = dataset.feature_count();

  std::map<Category, std::vector<std::string>> partitions;
  for (const auto& f : dataset.features) partitions[dataset.categories.at(f)].push_back(f);
  for (const auto& [cat, fs] : partitions) res.candidate_counts[cat] = fs.size();

  // Hyperparameters are tuned once per scenario and then frozen.
  EnsembleParams rf = config.fra.rf;
  EnsembleParams gbt = config.fra.gbt;
  std::vector<double> rf_cv, gbt_cv;
  stage("grid_search_cv", [&] {
    const Matrix x = train.matrix();
    if (!config.rf_grid.empty()) {
      const auto cv = grid_search_cv(x, *train.target, config.rf_grid, config.cv_folds, seed);
      rf = config.rf_grid[cv.chosen];
      rf_cv = cv.mean_mse;
    }
    if (!config.gbt_grid.empty()) {
      const auto cv = grid_search_cv(x, *train.target, config.gbt_grid, config.cv_folds, seed);
      gbt = config.gbt_grid[cv.chosen];
      gbt_cv = cv.mean_mse;
    }
    return 0;
  });
  rf.kind = EnsembleKind::RandomForest;
  gbt.kind = EnsembleKind::GradientBoost;
  rf.seed = seed;
  gbt.seed = seed;

  run.fra = stage("fra", [&] {
    FraConfig fc = config.fra;
    fc.rf = rf;
    fc.gbt = gbt;
    fc.tune_first = false;
    fc.seed = derive_seed(seed, {1});
    return fra_reduce(train, fc);
  });
  res.fra_iterations = run.fra.iterations();
  res.fra_survivors = run.fra.survivors.size();
  res.fra_forced_stop = run.fra.forced_stop;

  run.shapley = stage("shapley", [&] {
    const Matrix x = train.matrix();
    const auto model = fit_forest(x, *train.target, rf);
    const Matrix background =
        subsample_rows(x, config.shapley.background_rows, derive_seed(seed, {2}));
    const Matrix explain = subsample_rows(x, config.shapley.explain_rows, derive_seed(seed, {3}));
    return shapley_sampled(row_predictor(model), background, explain, train.features,
                           config.shapley.permutations, derive_seed(seed, {4}))
        .report;
  });

  const auto fv = stage("final_vector", [&] {
    return final_vector(run.fra, run.shapley, config.fra.top_k_union, config.fra.target_count);
  });
  res.final_features = fv.features;
  res.shapley_overlap = fv.overlap;
  for (const auto& f : res.final_features) res.final_categories[f] = dataset.categories.at(f);

  res.contribution = stage("contribution_factors", [&] {
    return contribution_factors(res.final_features, dataset.categories, res.candidate_counts);
  });

  const auto imp = stage("improvement", [&] {
    return improvement(rf, train, test, res.final_features, partitions);
  });
  res.mse_diverse = imp.mse_diverse;
  res.arms = imp.arms;
  res.mean_improvement = imp.mean_improvement;

  stage("rf_importance", [&] {
    const auto report = mdi(imp.diverse_model, res.final_features);
    for (const auto& name : report.ranking) res.rf_importance.emplace_back(name, report.score(name));
    return 0;
  });

  auto rf_summary = summarize("rf", imp.diverse_model);
  rf_summary.cv_mean_mse = rf_cv;
  res.models.push_back(rf_summary);
  ModelSummary gbt_summary;
  gbt_summary.role = "gbt";
  gbt_summary.params = gbt;
  gbt_summary.trees = gbt.n_estimators;
  gbt_summary.cv_mean_mse = gbt_cv;
  res.models.push_back(gbt_summary);
  return run;
}

} // namespace cryptodiv
