#include "cryptodiv/cli.hpp"

#include <CLI11.hpp>

#include <ostream>

#include "cryptodiv/config.hpp"
#include "cryptodiv/csv.hpp"
#include "cryptodiv/parallel.hpp"
#include "cryptodiv/report.hpp"

namespace cryptodiv {

namespace fs = std::filesystem;

Dataset load_dataset_csv(const fs::path& path, const std::string& target,
                         const std::map<std::string, Category>& categories) {
  const auto table = read_csv(path);
  if (table.header.empty() || table.header.front() != "date") {
    throw InputError(path.string() + ": first column must be 'date'");
  }
  const std::size_t target_col = table.column(target, path.string());
  Dataset d;
  std::vector<double> y;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 1; c < table.header.size(); ++c) {
    if (c == target_col) continue;
    feature_cols.push_back(c);
    d.features.push_back(table.header[c]);
    const auto it = categories.find(table.header[c]);
    d.categories[table.header[c]] = it == categories.end() ? Category::Market : it->second;
  }
  d.columns.assign(feature_cols.size(), {});
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto line = table.line_numbers[r];
    try {
      d.dates.push_back(Date::parse(row[0]));
    } catch (const std::invalid_argument& e) {
      throw InputError(path.string() + ":" + std::to_string(line) + ": " + e.what());
    }
    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
      const double v = parse_cell(row[feature_cols[f]], path, line);
      if (is_missing(v)) {
        throw InputError(path.string() + ":" + std::to_string(line) + ": missing value for '" +
                         d.features[f] + "'");
      }
      d.columns[f].push_back(v);
    }
    const double t = parse_cell(row[target_col], path, line);
    if (is_missing(t)) {
      throw InputError(path.string() + ":" + std::to_string(line) + ": missing target");
    }
    y.push_back(t);
  }
  if (d.dates.empty()) throw InputError(path.string() + ": no rows");
  d.target = std::move(y);
  return d.canonical();
}

namespace {

std::vector<Point> index_price(const IndexSource& source) {
  if (source.index_csv) return load_index_csv(*source.index_csv);
  if (source.price_csv) return load_price_csv(*source.price_csv);
  const auto snapshots = load_mcaps(*source.mcaps);
  std::vector<Point> out;
  for (const auto& row : compute_index(snapshots, source.params)) out.push_back({row.date, row.value});
  return out;
}

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<std::string> out;
  std::optional<std::string> periods;
  std::optional<std::string> windows;
  std::optional<std::size_t> target_features;
  std::optional<double> corr_start;
  std::optional<double> corr_step;
  std::optional<std::size_t> top_k;
  std::optional<int> power;
  std::optional<double> holdout;
};

void apply(RunConfig& c, const RunOverrides& o) {
  auto& e = c.experiment;
  if (o.seed) e.seed = *o.seed;
  if (o.jobs) c.jobs = *o.jobs;
  if (o.out) c.output_dir = *o.out;
  if (o.periods) e.periods = parse_date_list(*o.periods);
  if (o.windows) e.windows = parse_int_list(*o.windows);
  if (o.target_features) e.fra.target_count = *o.target_features;
  if (o.corr_start) e.fra.corr_start = *o.corr_start;
  if (o.corr_step) e.fra.corr_step = *o.corr_step;
  if (o.top_k) e.fra.top_k_union = *o.top_k;
  if (o.power) c.index.params.power = *o.power;
  if (o.holdout) e.holdout = *o.holdout;
}

int cmd_run(const std::string& config_path, const RunOverrides& overrides, std::ostream& out,
            std::ostream& err) {
  RunConfig config = load_config(config_path);
  apply(config, overrides);
  config.validate();
  set_max_jobs(config.jobs);
  const auto experiment = config.resolved();

  const Corpus corpus = load_corpus(config.manifest);
  const auto prepared = prepare_corpus(corpus, index_price(config.index), experiment);
  err << "corpus: " << prepared.panel.columns.size() << " columns after cleaning, "
      << prepared.drop_log.size() << " dropped\n";

  std::vector<Scenario> scenarios;
  for (const auto& p : experiment.periods) {
    for (int w : experiment.windows) scenarios.push_back({p, w});
  }

  std::vector<ScenarioResult> results;
  OutputFiles extra;
  std::map<std::string, std::vector<LogRecord>> period_logs;
  for (const auto& s : scenarios) {
    err << "scenario " << s.label() << "\n";
    auto run = run_scenario(prepared, s, experiment);
    extra["audit/" + s.label() + "_fra.json"] = fra_audit_json(run.fra);
    extra["scenarios/" + s.label() + "_shapley.csv"] = importance_csv(run.shapley);
    period_logs.try_emplace(s.set_label(), run.result.exclusions);
    results.push_back(std::move(run.result));
  }

  OutputFiles files = render_tables(results);
  files.merge(extra);
  files["drop_log.csv"] = log_csv(prepared.drop_log);
  files["imputation_log.csv"] = log_csv(prepared.imputation_log);
  for (const auto& [set, exclusions] : period_logs) {
    std::vector<LogRecord> log = prepared.drop_log;
    log.insert(log.end(), exclusions.begin(), exclusions.end());
    files["drop_log_" + set + ".csv"] = log_csv(log);
  }
  write_outputs(config.output_dir, files);
  out << "wrote " << files.size() << " files to " << config.output_dir.string() << "\n";
  return 0;
}

struct ModelFlags {
  std::size_t trees = 100;
  std::optional<std::size_t> max_depth;
  std::uint64_t seed = 42;

  EnsembleParams params(EnsembleKind kind) const {
    EnsembleParams p;
    p.kind = kind;
    p.n_estimators = trees;
    p.max_depth = max_depth;
    p.seed = seed;
    return p;
  }
};

void add_model_flags(CLI::App* cmd, ModelFlags& m) {
  cmd->add_option("--trees", m.trees, "Estimators per ensemble")->capture_default_str();
  cmd->add_option("--max-depth", m.max_depth, "Tree depth limit (unlimited when omitted)");
  cmd->add_option("--seed", m.seed, "Random seed")->capture_default_str();
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Crypto100 index and data-source diversity analysis"};
  app.require_subcommand(1);

  // index
  std::string mcaps, index_out, reference;
  int power = 7;
  std::size_t top_n = 100;
  bool calibrate = false;
  auto* index_cmd = app.add_subcommand("index", "Compute the daily Crypto100 index");
  index_cmd->add_option("--mcaps", mcaps, "Long-format market caps CSV")->required();
  index_cmd->add_option("--power", power, "Scaling-factor power")->capture_default_str();
  index_cmd->add_option("--top-n", top_n, "Constituent count")->capture_default_str();
  index_cmd->add_option("--out", index_out, "Index CSV to write")->required();
  index_cmd->add_flag("--calibrate", calibrate, "Choose the power against --reference");
  index_cmd->add_option("--reference", reference, "Reference price CSV (date,price)");

  // run
  std::string config_path;
  RunOverrides ov;
  auto* run_cmd = app.add_subcommand("run", "Run every scenario from a config file");
  run_cmd->add_option("--config", config_path, "JSON run config")->required();
  run_cmd->add_option("--seed", ov.seed);
  run_cmd->add_option("--jobs", ov.jobs, "Worker cap; results do not depend on it");
  run_cmd->add_option("--out", ov.out, "Output directory");
  run_cmd->add_option("--periods", ov.periods, "Comma-separated period starts");
  run_cmd->add_option("--windows", ov.windows, "Comma-separated prediction windows");
  run_cmd->add_option("--target-features", ov.target_features);
  run_cmd->add_option("--corr-start", ov.corr_start);
  run_cmd->add_option("--corr-step", ov.corr_step);
  run_cmd->add_option("--top-k", ov.top_k, "Union size taken from FRA and Shapley");
  run_cmd->add_option("--power", ov.power);
  run_cmd->add_option("--holdout", ov.holdout);

  // fra
  std::string data, target = "target", fra_out;
  FraConfig fra;
  ModelFlags fra_model;
  std::size_t jobs = 0;
  auto* fra_cmd = app.add_subcommand("fra", "Run the feature reduction loop on a dataset CSV");
  fra_cmd->add_option("--data", data, "date,<features...>,target CSV")->required();
  fra_cmd->add_option("--target", target, "Target column")->capture_default_str();
  fra_cmd->add_option("--out", fra_out, "Output directory")->required();
  fra_cmd->add_option("--target-features", fra.target_count)->capture_default_str();
  fra_cmd->add_option("--corr-start", fra.corr_start)->capture_default_str();
  fra_cmd->add_option("--corr-step", fra.corr_step)->capture_default_str();
  fra_cmd->add_option("--pfi-repeats", fra.pfi_repeats)->capture_default_str();
  fra_cmd->add_option("--jobs", jobs);
  add_model_flags(fra_cmd, fra_model);

  // importance
  std::string method = "mdi", model_kind = "rf", imp_out;
  std::size_t repeats = 5, permutations = 20, background = 100, explain = 200;
  ModelFlags imp_model;
  auto* imp_cmd = app.add_subcommand("importance", "Score features of a dataset CSV");
  imp_cmd->add_option("--data", data)->required();
  imp_cmd->add_option("--target", target)->capture_default_str();
  imp_cmd->add_option("--method", method)
      ->check(CLI::IsMember({"pearson", "mdi", "pfi", "shapley"}))
      ->capture_default_str();
  imp_cmd->add_option("--model", model_kind)->check(CLI::IsMember({"rf", "gbt"}))->capture_default_str();
  imp_cmd->add_option("--repeats", repeats, "PFI repeats")->capture_default_str();
  imp_cmd->add_option("--permutations", permutations, "Shapley permutations")->capture_default_str();
  imp_cmd->add_option("--background", background, "Shapley background rows")->capture_default_str();
  imp_cmd->add_option("--explain", explain, "Shapley explained rows")->capture_default_str();
  imp_cmd->add_option("--out", imp_out, "CSV to write")->required();
  imp_cmd->add_option("--jobs", jobs);
  add_model_flags(imp_cmd, imp_model);

  // report
  std::string results_dir;
  auto* report_cmd = app.add_subcommand("report", "Re-render tables from stored scenario results");
  report_cmd->add_option("--results", results_dir, "Output directory of an earlier run")->required();

  std::vector<std::string> storage = {"cryptodiv"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*index_cmd) {
      IndexParams params{top_n, power};
      const auto snapshots = load_mcaps(mcaps);
      if (calibrate) {
        if (reference.empty()) throw std::invalid_argument("--calibrate needs --reference");
        std::vector<Point> sums;
        for (const auto& row : compute_index(snapshots, {top_n, 1})) sums.push_back({row.date, row.sum_mcap});
        const auto cal = calibrate_power(sums, load_price_csv(reference));
        std::string fit = csv_line({"power", "objective", "chosen"});
        for (const auto& r : cal.table) {
          fit += csv_line({std::to_string(r.power), format_number(r.objective),
                           r.power == cal.chosen_power ? "1" : "0"});
        }
        fs::path fit_path = index_out;
        fit_path += ".calibration.csv";
        replace_files(fit_path.parent_path().empty() ? "." : fit_path.parent_path(),
                      {{fit_path.filename().string(), fit}});
        params.power = cal.chosen_power;
        out << "chosen_power=" << cal.chosen_power << " overlap_days=" << cal.overlap_days << "\n";
      }
      const auto rows = compute_index(snapshots, params);
      const fs::path p = index_out;
      replace_files(p.parent_path().empty() ? "." : p.parent_path(),
                    {{p.filename().string(), index_csv(rows)}});
      out << "wrote " << rows.size() << " index rows to " << index_out << "\n";
      return 0;
    }
    if (*run_cmd) return cmd_run(config_path, ov, out, err);
    if (*fra_cmd) {
      set_max_jobs(jobs);
      const auto dataset = load_dataset_csv(data, target);
      fra.rf = fra_model.params(EnsembleKind::RandomForest);
      fra.gbt = fra_model.params(EnsembleKind::GradientBoost);
      fra.seed = fra_model.seed;
      fra.top_k_union = std::min(fra.top_k_union, fra.target_count);
      const auto result = fra_reduce(dataset, fra);
      std::string survivors = csv_line({"feature", "rank"});
      for (std::size_t i = 0; i < result.survivors.size(); ++i) {
        survivors += csv_line({result.survivors[i], std::to_string(i + 1)});
      }
      std::string trail = csv_line({"iteration", "threshold", "features_before", "removed", "forced"});
      for (const auto& it : result.audit) {
        trail += csv_line({std::to_string(it.iteration), format_number(it.threshold),
                           std::to_string(it.features_before), std::to_string(it.removed.size()),
                           it.forced ? "1" : "0"});
      }
      write_outputs(fra_out, {{"audit.json", fra_audit_json(result)},
                              {"iterations.csv", trail},
                              {"survivors.csv", survivors},
                              {"summary.json", "{\"survivors\": " +
                                                   std::to_string(result.survivors.size()) + "}\n"}});
      out << "iterations=" << result.iterations() << " survivors=" << result.survivors.size()
          << (result.forced_stop ? " forced_stop" : "") << "\n";
      return 0;
    }
    if (*imp_cmd) {
      set_max_jobs(jobs);
      const auto dataset = load_dataset_csv(data, target);
      ImportanceReport report;
      if (method == "pearson") {
        report = pearson_report(dataset);
      } else {
        const Matrix x = dataset.matrix();
        const auto kind = model_kind == "rf" ? EnsembleKind::RandomForest : EnsembleKind::GradientBoost;
        const auto model = fit_ensemble(x, *dataset.target, imp_model.params(kind));
        if (method == "mdi") {
          report = mdi(model, dataset.features);
        } else if (method == "pfi") {
          report = pfi(model, x, *dataset.target, dataset.features, repeats,
                       derive_seed(imp_model.seed, {1}));
        } else {
          const auto bg = subsample_rows(x, background, derive_seed(imp_model.seed, {2}));
          const auto ex = subsample_rows(x, explain, derive_seed(imp_model.seed, {3}));
          report = shapley_sampled(row_predictor(model), bg, ex, dataset.features, permutations,
                                   derive_seed(imp_model.seed, {4}))
                       .report;
        }
      }
      const fs::path p = imp_out;
      replace_files(p.parent_path().empty() ? "." : p.parent_path(),
                    {{p.filename().string(), importance_csv(report)}});
      out << "wrote " << report.ranking.size() << " scores to " << imp_out << "\n";
      return 0;
    }
    if (*report_cmd) {
      const auto results = load_scenarios(results_dir);
      auto files = render_tables(results);
      // Scenario documents are inputs here; leave them untouched.
      std::erase_if(files, [](const auto& f) { return f.first.starts_with("scenarios/"); });
      replace_files(results_dir, files);
      out << "re-rendered " << files.size() << " tables from " << results.size()
          << " scenarios\n";
      return 0;
    }
  } catch (const StageError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

} // namespace cryptodiv
