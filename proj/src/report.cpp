#include "cryptodiv/report.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>

#include "cryptodiv/csv.hpp"
#include "json_io.hpp"

namespace cryptodiv {

namespace fs = std::filesystem;

json to_json(const FeatureSampling& s) {
  switch (s.mode) {
    case FeatureSampling::Mode::All: return "all";
    case FeatureSampling::Mode::Fraction: return json{{"fraction", s.value}};
    case FeatureSampling::Mode::Count:
      return json{{"count", static_cast<std::size_t>(s.value)}};
  }
  return "all";
}

FeatureSampling sampling_from_json(const json& j) {
  if (j.is_string() && j.get<std::string>() == "all") return FeatureSampling::all();
  if (j.is_object() && j.size() == 1 && j.contains("fraction")) {
    return FeatureSampling::fraction(j.at("fraction").get<double>());
  }
  if (j.is_object() && j.size() == 1 && j.contains("count")) {
    return FeatureSampling::count(j.at("count").get<std::size_t>());
  }
  throw std::invalid_argument(
      "features_per_split must be \"all\", {\"fraction\": f} or {\"count\": n}");
}

json to_json(const EnsembleParams& p) {
  json j;
  j["kind"] = ensemble_tag(p.kind);
  j["n_estimators"] = p.n_estimators;
  j["max_depth"] = p.max_depth ? json(*p.max_depth) : json(nullptr);
  j["min_samples_split"] = p.min_samples_split;
  j["min_samples_leaf"] = p.min_samples_leaf;
  j["features_per_split"] = to_json(p.features_per_split);
  j["learning_rate"] = p.learning_rate;
  j["bootstrap"] = p.bootstrap;
  j["seed"] = p.seed;
  return j;
}

EnsembleParams params_from_json(const json& j) {
  EnsembleParams p;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "rf") {
    p.kind = EnsembleKind::RandomForest;
  } else if (kind == "gbt") {
    p.kind = EnsembleKind::GradientBoost;
  } else {
    throw std::invalid_argument("unknown model kind '" + kind + "'");
  }
  p.n_estimators = j.at("n_estimators").get<std::size_t>();
  if (!j.at("max_depth").is_null()) p.max_depth = j.at("max_depth").get<std::size_t>();
  p.min_samples_split = j.at("min_samples_split").get<std::size_t>();
  p.min_samples_leaf = j.at("min_samples_leaf").get<std::size_t>();
  p.features_per_split = sampling_from_json(j.at("features_per_split"));
  p.learning_rate = j.at("learning_rate").get<double>();
  p.bootstrap = j.at("bootstrap").get<bool>();
  p.seed = j.at("seed").get<std::uint64_t>();
  return p;
}

json to_json(const LogRecord& r) {
  return json{{"metric", r.metric}, {"reason", r.reason}, {"detail", r.detail}};
}

LogRecord log_from_json(const json& j) {
  return {j.at("metric").get<std::string>(), j.at("reason").get<std::string>(),
          j.at("detail").get<std::string>()};
}

json to_json(const ImportanceReport& r) {
  json scores = json::object();
  for (std::size_t i = 0; i < r.features.size(); ++i) scores[r.features[i]] = r.scores[i];
  return json{{"method", method_tag(r.method)}, {"model", r.model},
              {"ranking", r.ranking},          {"scores", scores},
              {"repeats", r.repeats},          {"seed", r.seed}};
}

namespace {

json to_json(const ModelSummary& m) {
  return json{{"role", m.role},       {"params", to_json(m.params)},
              {"trees", m.trees},     {"max_depth", m.max_depth},
              {"mean_leaves", m.mean_leaves}, {"cv_mean_mse", m.cv_mean_mse}};
}

ModelSummary summary_from_json(const json& j) {
  ModelSummary m;
  m.role = j.at("role").get<std::string>();
  m.params = params_from_json(j.at("params"));
  m.trees = j.at("trees").get<std::size_t>();
  m.max_depth = j.at("max_depth").get<std::size_t>();
  m.mean_leaves = j.at("mean_leaves").get<double>();
  m.cv_mean_mse = j.at("cv_mean_mse").get<std::vector<double>>();
  return m;
}

template <typename V>
json category_map(const std::map<Category, V>& m) {
  json j = json::object();
  for (const auto& [cat, v] : m) j[std::string(category_tag(cat))] = v;
  return j;
}

template <typename V>
std::map<Category, V> category_map_from(const json& j) {
  std::map<Category, V> out;
  for (const auto& [tag, v] : j.items()) out[parse_category(tag)] = v.template get<V>();
  return out;
}

std::string table(const std::vector<std::string>& header,
                  const std::vector<std::vector<std::string>>& rows) {
  std::string out = csv_line(header);
  for (const auto& r : rows) out += csv_line(r);
  return out;
}

// Distinct set labels in period order.
std::vector<std::string> set_labels(std::span<const ScenarioResult> results) {
  std::map<Date, std::string> sets;
  for (const auto& r : results) sets.emplace(r.scenario.period_start, r.scenario.set_label());
  std::vector<std::string> out;
  for (auto& [d, label] : sets) out.push_back(label);
  return out;
}

std::map<std::string, std::map<int, const ScenarioResult*>> by_set(
    std::span<const ScenarioResult> results) {
  std::map<std::string, std::map<int, const ScenarioResult*>> out;
  for (const auto& r : results) out[r.scenario.set_label()][r.scenario.window] = &r;
  return out;
}

// Horizon groups per set, skipping sets that lack a member window.
std::vector<std::pair<std::string, std::pair<HorizonGroup, HorizonGroup>>> horizon_groups(
    std::span<const ScenarioResult> results) {
  std::vector<std::pair<std::string, std::pair<HorizonGroup, HorizonGroup>>> out;
  const auto sets = by_set(results);
  for (const auto& label : set_labels(results)) {
    std::map<int, ImportanceMap> per_window;
    for (const auto& [w, r] : sets.at(label)) {
      ImportanceMap m;
      for (const auto& [name, v] : r->rf_importance) m[name] = v;
      per_window[w] = std::move(m);
    }
    bool complete = true;
    for (int w : kShortTermWindows) complete = complete && per_window.contains(w);
    for (int w : kLongTermWindows) complete = complete && per_window.contains(w);
    if (complete) out.emplace_back(label, group_horizons(per_window));
  }
  return out;
}

std::string ranked_table(const std::vector<std::pair<std::string, RankedFeatures>>& a,
                         const std::vector<std::pair<std::string, RankedFeatures>>& b,
                         std::size_t k) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t s = 0; s < a.size(); ++s) {
    for (std::size_t i = 0; i < k; ++i) {
      rows.push_back({a[s].first, std::to_string(i + 1),
                      i < a[s].second.size() ? a[s].second[i].first : "",
                      i < b[s].second.size() ? b[s].second[i].first : ""});
    }
  }
  return table({"set", "rank", "short_term", "long_term"}, rows);
}

void write_file(const fs::path& path, const std::string& contents) {
  fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot read " + path.string());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

} // namespace

std::string scenario_json(const ScenarioResult& r) {
  json j;
  j["scenario"] = r.scenario.label();
  j["period_start"] = r.scenario.period_start.iso();
  j["window"] = r.scenario.window;
  j["rows"] = r.rows;
  j["train_rows"] = r.train_rows;
  j["test_rows"] = r.test_rows;
  j["candidate_features"] = r.candidate_features;
  j["candidate_counts"] = category_map(r.candidate_counts);
  json features = json::array();
  for (const auto& f : r.final_features) {
    features.push_back({{"name", f}, {"category", category_tag(r.final_categories.at(f))}});
  }
  j["final_features"] = features;
  j["contribution"] = category_map(r.contribution);
  json imp = json::array();
  for (const auto& [name, v] : r.rf_importance) imp.push_back({{"feature", name}, {"mdi", v}});
  j["rf_importance"] = imp;
  j["mse_diverse"] = r.mse_diverse;
  json arms = json::array();
  for (const auto& a : r.arms) {
    arms.push_back({{"category", category_tag(a.category)},
                    {"features", a.features},
                    {"mse", a.mse},
                    {"improvement_percent", a.improvement}});
  }
  j["single_category_arms"] = arms;
  j["single_category_features"] = "pre-selection candidates";
  j["mean_improvement_percent"] = r.mean_improvement;
  j["fra"] = {{"iterations", r.fra_iterations},
              {"survivors", r.fra_survivors},
              {"forced_stop", r.fra_forced_stop}};
  j["shapley_overlap"] = r.shapley_overlap;
  j["shapley_slice"] = "train";
  json models = json::array();
  for (const auto& m : r.models) models.push_back(to_json(m));
  j["models"] = models;
  json excl = json::array();
  for (const auto& e : r.exclusions) excl.push_back(to_json(e));
  j["exclusions"] = excl;
  return j.dump(2) + "\n";
}

ScenarioResult parse_scenario_json(std::string_view text, std::string_view source) {
  try {
    const json j = json::parse(text);
    ScenarioResult r;
    r.scenario.period_start = Date::parse(j.at("period_start").get<std::string>());
    r.scenario.window = j.at("window").get<int>();
    r.rows = j.at("rows").get<std::size_t>();
    r.train_rows = j.at("train_rows").get<std::size_t>();
    r.test_rows = j.at("test_rows").get<std::size_t>();
    r.candidate_features = j.at("candidate_features").get<std::size_t>();
    r.candidate_counts = category_map_from<std::size_t>(j.at("candidate_counts"));
    for (const auto& f : j.at("final_features")) {
      const auto name = f.at("name").get<std::string>();
      r.final_features.push_back(name);
      r.final_categories[name] = parse_category(f.at("category").get<std::string>());
    }
    r.contribution = category_map_from<double>(j.at("contribution"));
    for (const auto& e : j.at("rf_importance")) {
      r.rf_importance.emplace_back(e.at("feature").get<std::string>(), e.at("mdi").get<double>());
    }
    r.mse_diverse = j.at("mse_diverse").get<double>();
    for (const auto& a : j.at("single_category_arms")) {
      r.arms.push_back({parse_category(a.at("category").get<std::string>()),
                        a.at("features").get<std::size_t>(), a.at("mse").get<double>(),
                        a.at("improvement_percent").get<double>()});
    }
    r.mean_improvement = j.at("mean_improvement_percent").get<double>();
    r.fra_iterations = j.at("fra").at("iterations").get<std::size_t>();
    r.fra_survivors = j.at("fra").at("survivors").get<std::size_t>();
    r.fra_forced_stop = j.at("fra").at("forced_stop").get<bool>();
    r.shapley_overlap = j.at("shapley_overlap").get<std::size_t>();
    for (const auto& m : j.at("models")) r.models.push_back(summary_from_json(m));
    for (const auto& e : j.at("exclusions")) r.exclusions.push_back(log_from_json(e));
    return r;
  } catch (const std::exception& e) {
    throw InputError(std::string(source) + ": " + e.what());
  }
}

std::string fra_audit_json(const ReducedFeatureSet& fra) {
  json j;
  j["original"] = fra.original;
  j["survivors"] = fra.survivors;
  j["forced_stop"] = fra.forced_stop;
  j["rf"] = to_json(fra.rf);
  j["gbt"] = to_json(fra.gbt);
  json its = json::array();
  for (const auto& it : fra.audit) {
    json reports = json::array();
    for (const auto& r : it.reports) reports.push_back(to_json(r));
    its.push_back({{"iteration", it.iteration},
                   {"threshold", it.threshold},
                   {"features_before", it.features_before},
                   {"removed", it.removed},
                   {"forced", it.forced},
                   {"abs_correlation", it.abs_correlation},
                   {"reports", reports}});
  }
  j["iterations"] = its;
  json finals = json::array();
  for (const auto& r : fra.final_reports) finals.push_back(to_json(r));
  j["final_reports"] = finals;
  return j.dump(2) + "\n";
}

std::string importance_csv(const ImportanceReport& report) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < report.ranking.size(); ++i) {
    const auto& name = report.ranking[i];
    rows.push_back({name, format_number(report.score(name)), std::to_string(i + 1),
                    std::string(method_tag(report.method))});
  }
  return table({"feature", "score", "rank", "method"}, rows);
}

std::string log_csv(std::span<const LogRecord> records) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : records) rows.push_back({r.metric, r.reason, r.detail});
  return table({"metric", "reason", "detail"}, rows);
}

std::string feature_vectors_csv(std::span<const ScenarioResult> results) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : results) {
    rows.push_back({r.scenario.label(), std::to_string(r.final_features.size())});
  }
  return table({"scenario", "number_of_features"}, rows);
}

std::string top_features_csv(std::span<const ScenarioResult> results, std::size_t k) {
  std::vector<std::pair<std::string, RankedFeatures>> s, l;
  for (const auto& [label, groups] : horizon_groups(results)) {
    s.emplace_back(label, top_k(groups.first, k));
    l.emplace_back(label, top_k(groups.second, k));
  }
  return ranked_table(s, l, k);
}

std::string unique_features_csv(std::span<const ScenarioResult> results, std::size_t k) {
  std::vector<std::pair<std::string, RankedFeatures>> s, l;
  for (const auto& [label, groups] : horizon_groups(results)) {
    s.emplace_back(label, unique_top_k(groups.first, groups.second, k));
    l.emplace_back(label, unique_top_k(groups.second, groups.first, k));
  }
  return ranked_table(s, l, k);
}

std::string improvement_by_window_csv(std::span<const ScenarioResult> results) {
  const auto sets = set_labels(results);
  const auto grouped = by_set(results);
  std::set<int> windows;
  for (const auto& r : results) windows.insert(r.scenario.window);
  std::vector<std::string> header = {"prediction_window"};
  header.insert(header.end(), sets.begin(), sets.end());
  std::vector<std::vector<std::string>> rows;
  for (int w : windows) {
    std::vector<std::string> row = {std::to_string(w)};
    for (const auto& s : sets) {
      const auto& m = grouped.at(s);
      row.push_back(m.contains(w) && !m.at(w)->arms.empty()
                        ? format_fixed(m.at(w)->mean_improvement, 2)
                        : "-");
    }
    rows.push_back(std::move(row));
  }
  return table(header, rows);
}

std::string improvement_by_category_csv(std::span<const ScenarioResult> results) {
  const auto sets = set_labels(results);
  const auto grouped = by_set(results);
  std::map<std::string, std::map<Category, std::pair<double, int>>> acc;
  std::set<Category> seen;
  for (const auto& s : sets) {
    for (const auto& [w, r] : grouped.at(s)) {
      for (const auto& a : r->arms) {
        auto& [sum, n] = acc[s][a.category];
        sum += a.improvement;
        ++n;
        seen.insert(a.category);
      }
    }
  }
  std::vector<std::string> header = {"category"};
  header.insert(header.end(), sets.begin(), sets.end());
  std::vector<std::vector<std::string>> rows;
  for (Category c : kImprovementCategoryOrder) {
    // Market data has no row unless some run scored it; USDC always has one.
    if (c == Category::Market && !seen.contains(c)) continue;
    std::vector<std::string> row = {std::string(category_label(c))};
    for (const auto& s : sets) {
      const auto& m = acc[s];
      row.push_back(m.contains(c) ? format_fixed(m.at(c).first / m.at(c).second, 2) : "-");
    }
    rows.push_back(std::move(row));
  }
  return table(header, rows);
}

std::string contribution_csv(std::span<const ScenarioResult> results) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : results) {
    for (const auto& [cat, factor] : r.contribution) {
      rows.push_back({r.scenario.set_label(), std::to_string(r.scenario.window),
                      std::string(category_tag(cat)), format_number(factor)});
    }
  }
  return table({"set", "window", "category", "factor"}, rows);
}

OutputFiles render_tables(std::span<const ScenarioResult> results) {
  OutputFiles files;
  json summary;
  json scenarios = json::array();
  for (const auto& r : results) {
    files["scenarios/" + r.scenario.label() + ".json"] = scenario_json(r);
    scenarios.push_back({{"scenario", r.scenario.label()},
                         {"features", r.final_features.size()},
                         {"mse_diverse", r.mse_diverse},
                         {"mean_improvement_percent", r.mean_improvement},
                         {"fra_forced_stop", r.fra_forced_stop}});
  }
  summary["scenarios"] = scenarios;
  files["feature_vectors.csv"] = feature_vectors_csv(results);
  files["top5_features.csv"] = top_features_csv(results, 5);
  files["unique_top20.csv"] = unique_features_csv(results, 20);
  files["improvement_by_window.csv"] = improvement_by_window_csv(results);
  files["improvement_by_category.csv"] = improvement_by_category_csv(results);
  files["contribution_by_window.csv"] = contribution_csv(results);
  files["summary.json"] = summary.dump(2) + "\n";
  return files;
}

std::vector<ScenarioResult> load_scenarios(const fs::path& dir) {
  const fs::path sdir = dir / "scenarios";
  if (!fs::is_directory(sdir)) throw InputError(sdir.string() + ": no scenarios directory");
  std::vector<ScenarioResult> out;
  std::vector<fs::path> paths;
  for (const auto& e : fs::directory_iterator(sdir)) {
    const auto name = e.path().filename().string();
    // Only <year>_<window>.json; Shapley and audit files sit beside them.
    if (e.path().extension() != ".json" || name.find("_shapley") != std::string::npos) continue;
    paths.push_back(e.path());
  }
  std::sort(paths.begin(), paths.end());
  for (const auto& p : paths) out.push_back(parse_scenario_json(read_file(p), p.string()));
  if (out.empty()) throw InputError(sdir.string() + ": no scenario results");
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.scenario.period_start != b.scenario.period_start) {
      return a.scenario.period_start < b.scenario.period_start;
    }
    return a.scenario.window < b.scenario.window;
  });
  return out;
}

void write_outputs(const fs::path& out, const OutputFiles& files) {
  if (fs::exists(out) && !fs::exists(out / "summary.json")) {
    throw std::runtime_error(out.string() +
                             " exists and is not an earlier output tree; refusing to replace it");
  }
  fs::path partial = out;
  partial += ".partial";
  fs::remove_all(partial);
  try {
    for (const auto& [rel, contents] : files) write_file(partial / rel, contents);
    if (fs::exists(out)) fs::remove_all(out);
    fs::rename(partial, out);
  } catch (...) {
    std::error_code ec;
    fs::remove_all(partial, ec);
    throw;
  }
}

void replace_files(const fs::path& dir, const OutputFiles& files) {
  for (const auto& [rel, contents] : files) {
    const fs::path target = dir / rel;
    fs::path tmp = target;
    tmp += ".tmp";
    try {
      write_file(tmp, contents);
      fs::rename(tmp, target);
    } catch (...) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw;
    }
  }
}

} // namespace cryptodiv
