#pragma once

// Small-model experiment settings so full scenarios run in seconds.

#include "cryptodiv/experiments.hpp"
#include "synthetic.hpp"

namespace cryptodiv::testing {

inline ExperimentConfig fast_config(std::uint64_t seed) {
  ExperimentConfig c;
  c.seed = seed;
  c.fra.target_count = 10;
  c.fra.top_k_union = 5;
  c.fra.corr_start = 0.5;
  c.fra.corr_step = 0.1;
  c.fra.pfi_repeats = 1;
  c.fra.rf.n_estimators = 12;
  c.fra.rf.max_depth = 6;
  c.fra.rf.features_per_split = FeatureSampling::fraction(1.0 / 3.0);
  c.fra.gbt.kind = EnsembleKind::GradientBoost;
  c.fra.gbt.n_estimators = 15;
  c.fra.gbt.max_depth = 3;
  c.shapley = {10, 20, 2};
  return c;
}

/// Planted two-category corpus, loaded and cleaned.
inline PreparedCorpus planted_prepared(const std::filesystem::path& dir, const PlantedOptions& o,
                                       const ExperimentConfig& config) {
  const auto files = write_planted_corpus(dir, o);
  return prepare_corpus(load_corpus(files.manifest), load_price_csv(files.price), config);
}

/// JSON run config over a synthetic corpus with single-candidate grids, so
/// the run skips cross-validation and finishes quickly.
inline std::string fast_run_config(const CorpusFiles& corpus, const std::string& periods,
                                   const std::string& windows, const std::string& output_dir) {
  return R"({
  "manifest": ")" + corpus.manifest.string() + R"(",
  "index": {"mcaps": ")" + corpus.mcaps.string() + R"(", "power": 7, "top_n": 100},
  "output_dir": ")" + output_dir + R"(",
  "seed": 42,
  "periods": [)" + periods + R"(],
  "windows": [)" + windows + R"(],
  "holdout": 0.2,
  "indicators": {"windows": [5, 10, 20, 30, 100, 200]},
  "fra": {"target_count": 10, "top_k_union": 5, "corr_start": 0.5, "corr_step": 0.1,
          "pfi_repeats": 1},
  "grid": {
    "rf": {"n_estimators": [12], "max_depth": [6], "min_samples_split": [2],
           "min_samples_leaf": [1], "features_per_split": [{"fraction": 0.3333}]},
    "gbt": {"n_estimators": [15], "max_depth": [3], "min_samples_split": [2],
            "min_samples_leaf": [1], "features_per_split": ["all"], "learning_rate": [0.1]}
  },
  "shapley": {"background_rows": 10, "explain_rows": 20, "permutations": 2}
}
)";
}

} // namespace cryptodiv::testing
