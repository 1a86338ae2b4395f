#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "cryptodiv/data.hpp"
#include "cryptodiv/fra.hpp"
#include "cryptodiv/importance.hpp"
#include "cryptodiv/index.hpp"
#include "cryptodiv/indicators.hpp"
#include "cryptodiv/models.hpp"

namespace cryptodiv {

/// A failure inside run_scenario, tagged with the scenario and stage.
class StageError : public std::runtime_error {
public:
  StageError(std::string scenario, std::string stage, const std::string& what)
      : std::runtime_error("scenario " + scenario + ", stage '" + stage + "': " + what),
        scenario_(std::move(scenario)), stage_(std::move(stage)) {}

  [[nodiscard]] const std::string& scenario() const { return scenario_; }
  [[nodiscard]] const std::string& stage() const { return stage_; }

private:
  std::string scenario_;
  std::string stage_;
};

struct ShapleyOptions {
  std::size_t background_rows = 100;
  std::size_t explain_rows = 200;
  std::size_t permutations = 20;
};

struct ExperimentConfig {
  DegeneracyOptions cleaning;
  bool indicators_enabled = true;
  IndicatorBattery indicators;
  std::vector<Date> periods = {Date{2017, 1, 1}, Date{2019, 1, 1}};
  std::vector<int> windows = {1, 7, 30, 90, 180};
  double holdout = 0.2;
  std::size_t cv_folds = 5;
  std::vector<EnsembleParams> rf_grid;
  std::vector<EnsembleParams> gbt_grid;
  FraConfig fra;
  ShapleyOptions shapley;
  std::uint64_t seed = 42;
};

/// Cleaned corpus with generated indicators plus the index price series.
struct PreparedCorpus {
  Panel panel;
  std::vector<LogRecord> drop_log;
  std::vector<LogRecord> imputation_log;
  std::vector<Point> index_price;
};

PreparedCorpus prepare_corpus(const Corpus& corpus, std::vector<Point> index_price,
                              const ExperimentConfig& config);

/// survivors in category / candidates in category. Categories without
/// candidates are omitted.
std::map<Category, double> contribution_factors(
    const std::vector<std::string>& final_features,
    const std::map<std::string, Category>& categories,
    const std::map<Category, std::size_t>& candidate_counts);

using ImportanceMap = std::map<std::string, double>;

struct HorizonGroup {
  std::string label; // ShortTerm / LongTerm
  std::vector<int> windows;
  ImportanceMap importance;
};

inline const std::vector<int> kShortTermWindows = {1, 7};
inline const std::vector<int> kLongTermWindows = {90, 180};

/// Merges per-window importance maps: features present in several member
/// windows get the mean of their values.
HorizonGroup merge_group(const std::string& label, const std::vector<int>& windows,
                         const std::map<int, ImportanceMap>& per_window);

/// ShortTerm (1, 7) and LongTerm (90, 180).
std::pair<HorizonGroup, HorizonGroup> group_horizons(const std::map<int, ImportanceMap>& per_window);

using RankedFeatures = std::vector<std::pair<std::string, double>>;

/// k highest merged importances, ties by ascending name.
RankedFeatures top_k(const HorizonGroup& group, std::size_t k = 5);

/// k highest among features in `a` but not in `b`.
RankedFeatures unique_top_k(const HorizonGroup& a, const HorizonGroup& b, std::size_t k = 20);

/// (mse_category - mse_diverse) / mse_diverse * 100.
double improvement_percent(double mse_category, double mse_diverse);

struct CategoryArm {
  Category category = Category::Market;
  std::size_t features = 0;
  double mse = 0.0;
  double improvement = 0.0; // percent
};

struct ImprovementResult {
  double mse_diverse = 0.0;
  std::vector<CategoryArm> arms;
  double mean_improvement = 0.0;
  TreeEnsemble diverse_model;
};

/// Trains `params` once on the diverse features and once per category
/// partition (same seed, same split) and compares held-out MSEs.
ImprovementResult improvement(const EnsembleParams& params, const Dataset& train,
                              const Dataset& test, const std::vector<std::string>& final_features,
                              const std::map<Category, std::vector<std::string>>& partitions);

struct ModelSummary {
  std::string role;
  EnsembleParams params;
  std::size_t trees = 0;
  std::size_t max_depth = 0;
  double mean_leaves = 0.0;
  std::vector<double> cv_mean_mse; // per grid candidate, when tuned
};

ModelSummary summarize(const std::string& role, const TreeEnsemble& model);

struct ScenarioResult {
  Scenario scenario;
  std::size_t rows = 0;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  std::size_t candidate_features = 0;
  std::map<Category, std::size_t> candidate_counts;
  std::vector<std::string> final_features;
  std::map<std::string, Category> final_categories;
  std::map<Category, double> contribution;
  RankedFeatures rf_importance; // MDI of the forest on the final vector
  double mse_diverse = 0.0;
  std::vector<CategoryArm> arms;
  double mean_improvement = 0.0;
  std::size_t fra_iterations = 0;
  std::size_t fra_survivors = 0;
  bool fra_forced_stop = false;
  std::size_t shapley_overlap = 0;
  std::vector<ModelSummary> models;
  std::vector<LogRecord> exclusions;
};

struct ScenarioRun {
  ScenarioResult result;
  ReducedFeatureSet fra;
  ImportanceReport shapley;
};

/// slice -> target -> split -> tune -> FRA -> Shapley ranking -> final vector
/// -> forest importance -> contribution factors -> improvement. Everything
/// is fitted on the training split; the test split scores the arms.
ScenarioRun run_scenario(const PreparedCorpus& corpus, const Scenario& scenario,
                         const ExperimentConfig& config);

std::uint64_t scenario_seed(std::uint64_t seed, const Scenario& scenario);

} // namespace cryptodiv
