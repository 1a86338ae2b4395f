#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cryptodiv/experiments.hpp"

namespace cryptodiv {

/// Relative path -> file contents. Paths use '/' separators.
using OutputFiles = std::map<std::string, std::string>;

std::string scenario_json(const ScenarioResult& result);
/// Inverse of scenario_json. Throws InputError naming `source` on bad input.
ScenarioResult parse_scenario_json(std::string_view text, std::string_view source);

std::string fra_audit_json(const ReducedFeatureSet& fra);
/// `feature,score,rank,method`, rank 1-based in ranking order.
std::string importance_csv(const ImportanceReport& report);
/// `metric,reason,detail`.
std::string log_csv(std::span<const LogRecord> records);

/// Row order of the improvement-by-category table. Market comes last.
inline constexpr Category kImprovementCategoryOrder[] = {
    Category::Macro,     Category::SentimentInterest, Category::OnChainBTC,
    Category::TraditionalIndex, Category::Technical, Category::OnChainUSDC,
    Category::Market};

/// `scenario,number_of_features`
std::string feature_vectors_csv(std::span<const ScenarioResult> results);
/// `set,rank,short_term,long_term`, k rows per set. Sets missing any of the
/// windows 1, 7, 90, 180 are skipped.
std::string top_features_csv(std::span<const ScenarioResult> results, std::size_t k = 5);
/// Same layout; each column lists features absent from the other horizon.
std::string unique_features_csv(std::span<const ScenarioResult> results, std::size_t k = 20);
/// `prediction_window,<set>...`, mean improvement with two decimals, "-" when absent.
std::string improvement_by_window_csv(std::span<const ScenarioResult> results);
/// `category,<set>...`, per-category improvement averaged over the set's windows.
std::string improvement_by_category_csv(std::span<const ScenarioResult> results);
/// `set,window,category,factor`, long format for plotting.
std::string contribution_csv(std::span<const ScenarioResult> results);

/// Every aggregate table plus per-scenario JSON documents and summary.json.
OutputFiles render_tables(std::span<const ScenarioResult> results);

/// Loads every scenarios/<label>.json under `dir`, ordered by (period, window).
std::vector<ScenarioResult> load_scenarios(const std::filesystem::path& dir);

/// Writes `files` under `<out>.partial` and renames it to `out`. An existing
/// `out` is replaced only if it holds a summary.json from an earlier run.
/// Nothing is left behind on failure.
void write_outputs(const std::filesystem::path& out, const OutputFiles& files);

/// Rewrites individual files inside an existing directory, each through a
/// temporary sibling and a rename.
void replace_files(const std::filesystem::path& dir, const OutputFiles& files);

} // namespace cryptodiv
