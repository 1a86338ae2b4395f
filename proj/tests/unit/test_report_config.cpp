#include <doctest.h>

#include <fstream>

#include "cryptodiv/config.hpp"
#include "cryptodiv/csv.hpp"
#include "cryptodiv/report.hpp"
#include "synthetic.hpp"

using namespace cryptodiv;
namespace fs = std::filesystem;

namespace {

ScenarioResult fake(int year, int window, bool with_usdc) {
  ScenarioResult r;
  r.scenario = {Date{year, 1, 1}, window};
  r.rows = 100;
  r.train_rows = 80;
  r.test_rows = 20;
  r.candidate_features = 6;
  r.candidate_counts = {{Category::Macro, 3}, {Category::OnChainBTC, 3}};
  const std::string w = std::to_string(window);
  r.final_features = {"macro_" + w, "btc_common"};
  r.final_categories = {{"macro_" + w, Category::Macro}, {"btc_common", Category::OnChainBTC}};
  r.contribution = {{Category::Macro, 1.0 / 3.0}, {Category::OnChainBTC, 1.0 / 3.0}};
  r.rf_importance = {{"btc_common", 0.625}, {"macro_" + w, 0.375}};
  r.mse_diverse = 2.0;
  r.arms = {{Category::Macro, 3, 3.0, 50.0}, {Category::OnChainBTC, 3, 4.0, 100.0}};
  if (with_usdc) {
    r.candidate_counts[Category::OnChainUSDC] = 2;
    r.contribution[Category::OnChainUSDC] = 0.0;
    r.arms.push_back({Category::OnChainUSDC, 2, 5.0, 150.0});
  }
  r.mean_improvement = with_usdc ? 100.0 : 75.0;
  r.fra_iterations = 3;
  r.fra_survivors = 2;
  r.shapley_overlap = 1;
  EnsembleParams p;
  p.max_depth = 4;
  p.features_per_split = FeatureSampling::fraction(1.0 / 3.0);
  r.models = {{"rf", p, 10, 4, 7.5, {1.5, 2.5}}};
  r.exclusions = {{"usdc_x", "late_start", "first=2018-10-01"}};
  return r;
}

std::vector<ScenarioResult> fake_runs() {
  std::vector<ScenarioResult> out;
  for (int w : {1, 7, 30, 90, 180}) out.push_back(fake(2017, w, false));
  for (int w : {1, 7, 30, 90, 180}) out.push_back(fake(2019, w, true));
  return out;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  return out;
}

} // namespace

TEST_CASE("scenario JSON round-trips") {
  const auto r = fake(2019, 7, true);
  const auto text = scenario_json(r);
  const auto back = parse_scenario_json(text, "mem");
  CHECK(scenario_json(back) == text);
  CHECK(back.final_features == r.final_features);
  CHECK(back.models[0].params == r.models[0].params);
  CHECK_THROWS_AS(parse_scenario_json("{}", "broken.json"), InputError);
  try {
    parse_scenario_json("{", "broken.json");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("broken.json") != std::string::npos);
  }
}

TEST_CASE("aggregate table schemas") {
  const auto runs = fake_runs();
  const auto fv = lines(feature_vectors_csv(runs));
  CHECK(fv.front() == "scenario,number_of_features");
  CHECK(fv.size() == 11);
  CHECK(fv[1] == "2017_1,2");

  const auto top = lines(top_features_csv(runs, 5));
  CHECK(top.front() == "set,rank,short_term,long_term");
  CHECK(top.size() == 11);
  CHECK(top[1] == "2017,1,btc_common,btc_common");
  CHECK(top[2] == "2017,2,macro_1,macro_180");

  const auto uniq = lines(unique_features_csv(runs, 20));
  CHECK(uniq.size() == 41);
  CHECK(uniq[1] == "2017,1,macro_1,macro_180");

  const auto win = lines(improvement_by_window_csv(runs));
  CHECK(win.front() == "prediction_window,2017,2019");
  CHECK(win[1] == "1,75.00,100.00");
  CHECK(win.size() == 6);

  const auto cat = lines(improvement_by_category_csv(runs));
  CHECK(cat.front() == "category,2017,2019");
  REQUIRE(cat.size() == 7); // six categories, no Market arm
  bool usdc_dash = false;
  for (const auto& l : cat) {
    if (l.find("USDC") != std::string::npos) usdc_dash = l.find(",-,") != std::string::npos;
  }
  CHECK(usdc_dash);
  CHECK(cat[1].find("50.00") != std::string::npos);

  const auto contrib = lines(contribution_csv(runs));
  CHECK(contrib.front() == "set,window,category,factor");

  const auto files = render_tables(runs);
  CHECK(files.size() == 10 + 7);
  CHECK(files.contains("scenarios/2019_180.json"));
}

TEST_CASE("write_outputs, load_scenarios and replace_files") {
  const auto dir = testing::temp_dir("outputs");
  const auto runs = fake_runs();
  const auto out = dir / "results";
  write_outputs(out, render_tables(runs));
  CHECK_FALSE(fs::exists(dir / "results.partial"));
  const auto loaded = load_scenarios(out);
  REQUIRE(loaded.size() == runs.size());
  CHECK(render_tables(loaded) == render_tables(runs));

  // A second write replaces an earlier tree.
  write_outputs(out, {{"summary.json", "{}\n"}});
  CHECK(testing::read_tree(out).size() == 1);

  fs::create_directories(dir / "precious");
  { std::ofstream(dir / "precious" / "keep.txt") << "x"; }
  CHECK_THROWS(write_outputs(dir / "precious", {{"summary.json", "{}\n"}}));
  CHECK(fs::exists(dir / "precious" / "keep.txt"));

  replace_files(out, {{"extra.csv", "a\n"}});
  CHECK(testing::read_tree(out).at("extra.csv") == "a\n");
}

TEST_CASE("log and importance CSVs") {
  const std::vector<LogRecord> log = {{"m", "flat", "flat_run=61 >= 60"}};
  CHECK(log_csv(log) == "metric,reason,detail\nm,flat,flat_run=61 >= 60\n");
  const auto rep = make_report(ImportanceMethod::PFI, {"b", "a"}, {0.5, 2.0});
  CHECK(importance_csv(rep) == "feature,score,rank,method\na,2,1,pfi\nb,0.5,2,pfi\n");
}

TEST_CASE("config parsing") {
  const auto dir = testing::temp_dir("config");
  { std::ofstream(dir / "m.json") << R"({"metrics":[]})"; }
  { std::ofstream(dir / "p.csv") << "date,price\n"; }

  const auto cfg = parse_config(R"({"manifest":"m.json","index":{"price_csv":"p.csv"},
      "seed":7,"windows":[1,7],"periods":["2017-01-01"],
      "grid":{"rf":{"n_estimators":[10],"max_depth":[null,3],"features_per_split":["all",{"fraction":0.5}]}}})",
                                dir, "cfg.json");
  CHECK(cfg.manifest == dir / "m.json");
  CHECK(cfg.experiment.seed == 7);
  CHECK(cfg.experiment.windows == std::vector<int>{1, 7});
  const auto rf = cfg.rf_grid.expand(EnsembleKind::RandomForest);
  CHECK(rf.size() == 2 * 2 * cfg.rf_grid.min_samples_split.size() *
                         cfg.rf_grid.min_samples_leaf.size());
  CHECK_FALSE(rf[0].max_depth.has_value());
  CHECK_NOTHROW(cfg.validate());

  try {
    parse_config(R"({"manifest":"m.json","fra":{"target_cnt":3}})", dir, "cfg.json");
    FAIL("expected an unknown-key error");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("cfg.json: fra.target_cnt: unknown key") != std::string::npos);
  }
  CHECK_THROWS(parse_config(R"({"manifest":"m.json","windows":"1"})", dir, "cfg.json"));

  const auto defaults = default_rf_grid().expand(EnsembleKind::RandomForest);
  CHECK(defaults.size() == 24);
  CHECK(default_gbt_grid().expand(EnsembleKind::GradientBoost).size() == 24);

  auto single = cfg;
  single.rf_grid = {{10}, {4}, {2}, {1}, {FeatureSampling::all()}, {0.1}, true};
  const auto resolved = single.resolved();
  CHECK(resolved.rf_grid.empty());
  CHECK(resolved.fra.rf.n_estimators == 10);

  CHECK(parse_date_list("2017-01-01,2019-01-01").size() == 2);
  CHECK(parse_int_list("1,7,30") == std::vector<int>{1, 7, 30});
  CHECK_THROWS(parse_int_list("1,x"));
}
