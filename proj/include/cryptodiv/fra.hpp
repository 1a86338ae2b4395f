#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cryptodiv/data.hpp"
#include "cryptodiv/importance.hpp"
#include "cryptodiv/models.hpp"

namespace cryptodiv {

struct FraConfig {
  std::size_t target_count = 100;
  double corr_start = 0.5;
  double corr_step = 0.025;
  std::size_t top_k_union = 75;
  std::size_t max_iterations = 200;
  std::size_t pfi_repeats = 3;

  EnsembleParams rf{.kind = EnsembleKind::RandomForest};
  EnsembleParams gbt{.kind = EnsembleKind::GradientBoost};

  // When set, rf/gbt are replaced by the grid-search winners on the full
  // feature set before the loop starts.
  bool tune_first = false;
  std::vector<EnsembleParams> rf_grid;
  std::vector<EnsembleParams> gbt_grid;
  std::size_t cv_folds = 5;

  std::uint64_t seed = 0;

  void validate() const;
};

struct FraIteration {
  std::size_t iteration = 0;
  double threshold = 0.0;
  std::size_t features_before = 0;
  std::vector<ImportanceReport> reports; // rf-mdi, gbt-mdi, rf-pfi, gbt-pfi
  std::map<std::string, double> abs_correlation;
  std::vector<std::string> removed;
  bool forced = false; // removal came from the forced-progress rule
};

struct ReducedFeatureSet {
  std::vector<std::string> original;  // ascending name
  std::vector<std::string> survivors; // ascending mean rank over final_reports
  std::vector<FraIteration> audit;
  std::vector<ImportanceReport> final_reports;
  EnsembleParams rf;
  EnsembleParams gbt;
  bool forced_stop = false; // max_iterations hit with target unmet

  [[nodiscard]] std::size_t iterations() const { return audit.size(); }
};

/// The floor(p/2) lowest-ranked features of a report (ranking order).
std::vector<std::string> bottom_half(const ImportanceReport& report);

/// Ascending mean rank across reports; ties by ascending name. Every report
/// must rank the same feature set.
std::vector<std::string> mean_rank_order(const std::vector<ImportanceReport>& reports);

/// Iterative multi-method elimination. Each round fits a forest and a boosted
/// model on the surviving features, scores them by MDI and PFI, and removes
/// features that sit in the bottom half of all four rankings while their
/// |correlation| with the target is below the current threshold. The
/// threshold then rises by corr_step. When the threshold exceeds 1 and a
/// round removes nothing, the feature with the worst mean rank goes.
ReducedFeatureSet fra_reduce(const Dataset& dataset, const FraConfig& config);

struct FinalVector {
  std::vector<std::string> features; // FRA top-k order, then Shapley-only by Shapley rank
  std::size_t overlap = 0;           // |Shapley top overlap_k  ∩  FRA survivors|
  std::size_t overlap_k = 0;
};

FinalVector final_vector(const ReducedFeatureSet& fra, const ImportanceReport& shapley,
                         std::size_t k, std::size_t overlap_k = 100);

} // namespace cryptodiv
