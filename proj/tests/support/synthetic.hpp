#pragma once

// Synthetic corpora with planted structure for tests and the acceptance suite.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cryptodiv/data.hpp"
#include "cryptodiv/index.hpp"

namespace cryptodiv::testing {

/// Multi-category daily corpus driven by one latent log-market-cap walk.
/// A share of each category tracks the walk; the rest is AR(1) noise.
struct CorpusOptions {
  Date start{2016, 1, 1};
  std::size_t days = 2000;
  std::map<Category, std::size_t> counts = {
      {Category::Macro, 20},       {Category::SentimentInterest, 14},
      {Category::TraditionalIndex, 30}, {Category::OnChainBTC, 153},
      {Category::OnChainUSDC, 38}};
  Date usdc_start{2018, 10, 1};
  Date late_sentiment_start{2018, 2, 1}; // one sentiment metric starts here
  std::size_t assets = 120;
  double informative_share = 0.25;
  bool degenerate_columns = true; // one flat and one sparse column
  std::uint64_t seed = 7;
};

struct CorpusFiles {
  std::filesystem::path dir;
  std::filesystem::path manifest;
  std::filesystem::path mcaps;
  std::size_t metrics = 0; // raw columns written, market included
};

CorpusFiles write_corpus(const std::filesystem::path& dir, const CorpusOptions& options);

/// Two categories A (macro) and B (onchain_btc), each with `informative`
/// features that drive the price and `noise` features that do not. All
/// features are i.i.d. standard normal per day, and
///   price[t + window] = 1000 + g(A[t]) + h(B[t]) + noise.
struct PlantedOptions {
  Date start{2018, 1, 1};
  std::size_t days = 700;
  std::size_t informative = 3;
  std::size_t noise = 3;
  int window = 1;
  double noise_sd = 0.5;
  std::uint64_t seed = 1;
};

struct PlantedFiles {
  std::filesystem::path manifest;
  std::filesystem::path price;
};

PlantedFiles write_planted_corpus(const std::filesystem::path& dir, const PlantedOptions& options);

/// Dataset of 8 noisy copies of the target plus 32 pure-noise columns.
/// Informative columns are named inf_0..inf_7, noise columns noise_00..noise_31.
Dataset fra_fixture(std::uint64_t seed, std::size_t rows = 500, std::size_t informative = 8,
                    std::size_t noise = 32);

/// `date,<features...>,target`
void write_dataset_csv(const std::filesystem::path& path, const Dataset& dataset);

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& name);

/// Every regular file below `dir`, relative path -> contents.
std::map<std::string, std::string> read_tree(const std::filesystem::path& dir);

} // namespace cryptodiv::testing
