#include <doctest.h>

#include <fstream>
#include <sstream>

#include "cryptodiv/cli.hpp"
#include "cryptodiv/csv.hpp"
#include "cryptodiv/index.hpp"
#include "fast_config.hpp"
#include "synthetic.hpp"

using namespace cryptodiv;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

} // namespace

TEST_CASE("usage errors exit with 2, failures with 1") {
  CHECK(cli({}).code == 2);
  CHECK(cli({"nonsense"}).code == 2);
  CHECK(cli({"index", "--power", "7"}).code == 2);
  CHECK(cli({"--help"}).code == 0);

  const auto missing = cli({"index", "--mcaps", "/nonexistent/caps.csv", "--out", "/tmp/x.csv"});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("/nonexistent/caps.csv") != std::string::npos);
}

TEST_CASE("index on a three-day toy") {
  const auto dir = testing::temp_dir("cli_index");
  {
    std::ofstream f(dir / "caps.csv");
    f << "date,asset,market_cap_usd\n"
         "2020-01-01,a,6e9\n2020-01-01,b,4e9\n"
         "2020-01-02,a,5e11\n2020-01-02,b,5e11\n"
         "2020-01-03,a,1e10\n2020-01-03,b,1\n2020-01-03,c,2\n";
  }
  const auto r = cli({"index", "--mcaps", (dir / "caps.csv").string(), "--top-n", "2", "--out",
                      (dir / "index.csv").string()});
  REQUIRE(r.code == 0);
  const auto rows = load_index_csv(dir / "index.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].value == doctest::Approx(1000.0));
  CHECK(rows[1].value == doctest::Approx(1e12 / 35831808.0));
  CHECK(rows[2].value == doctest::Approx(index_from_sum(1e10 + 2, 7)));
}

TEST_CASE("index calibration recovers a planted power") {
  const auto dir = testing::temp_dir("cli_calibrate");
  std::string caps = "date,asset,market_cap_usd\n", ref = "date,price\n";
  Rng rng(8);
  for (int d = 0; d < 60; ++d) {
    const auto date = Date{2020, 1, 1}.plus_days(d).iso();
    double s = 0.0;
    for (int a = 0; a < 3; ++a) {
      const double cap = std::pow(10.0, 9.0 + 2.0 * rng.uniform());
      s += cap;
      caps += date + ",x" + std::to_string(a) + "," + format_number(cap) + "\n";
    }
    ref += date + "," + format_number(index_from_sum(s, 6)) + "\n";
  }
  { std::ofstream(dir / "caps.csv") << caps; }
  { std::ofstream(dir / "ref.csv") << ref; }
  const auto r = cli({"index", "--mcaps", (dir / "caps.csv").string(), "--out",
                      (dir / "i.csv").string(), "--calibrate", "--reference",
                      (dir / "ref.csv").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("chosen_power=6 overlap_days=60") != std::string::npos);
  CHECK(slurp(dir / "i.csv.calibration.csv").rfind("power,objective,chosen\n", 0) == 0);
}

TEST_CASE("run is byte-identical across repeats and report re-renders without the corpus") {
  const auto dir = testing::temp_dir("cli_run");
  testing::CorpusOptions o;
  o.days = 800;
  o.counts = {{Category::Macro, 4}, {Category::TraditionalIndex, 4}, {Category::OnChainBTC, 12}};
  const auto corpus = testing::write_corpus(dir / "corpus", o);
  {
    std::ofstream(dir / "run.json")
        << testing::fast_run_config(corpus, "\"2017-01-01\"", "1, 7", "out_a");
  }
  auto a = cli({"run", "--config", (dir / "run.json").string()});
  INFO(a.err);
  REQUIRE(a.code == 0);
  auto b = cli({"run", "--config", (dir / "run.json").string(), "--out",
                (dir / "out_b").string(), "--jobs", "2"});
  REQUIRE(b.code == 0);
  const auto tree_a = testing::read_tree(dir / "out_a");
  CHECK(tree_a == testing::read_tree(dir / "out_b"));
  CHECK(tree_a.contains("scenarios/2017_1.json"));
  CHECK(tree_a.contains("audit/2017_7_fra.json"));
  CHECK(tree_a.contains("drop_log.csv"));
  CHECK(tree_a.contains("feature_vectors.csv"));

  // A different seed changes the results.
  auto c = cli({"run", "--config", (dir / "run.json").string(), "--out",
                (dir / "out_c").string(), "--seed", "43"});
  REQUIRE(c.code == 0);
  CHECK(testing::read_tree(dir / "out_c") != tree_a);

  fs::remove_all(dir / "corpus");
  fs::remove(dir / "out_a" / "feature_vectors.csv");
  const auto rep = cli({"report", "--results", (dir / "out_a").string()});
  INFO(rep.err);
  REQUIRE(rep.code == 0);
  CHECK(testing::read_tree(dir / "out_a") == tree_a);

  const auto bad = cli({"run", "--config", (dir / "run.json").string(), "--out",
                        (dir / "out_d").string()});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("corpus") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "out_d"));
}

TEST_CASE("fra and importance commands on a dataset CSV") {
  const auto dir = testing::temp_dir("cli_fra");
  testing::write_dataset_csv(dir / "data.csv", testing::fra_fixture(4));
  const auto r = cli({"fra", "--data", (dir / "data.csv").string(), "--out",
                      (dir / "fra").string(), "--target-features", "10", "--trees", "10",
                      "--max-depth", "6", "--pfi-repeats", "1", "--seed", "4"});
  INFO(r.err);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("survivors=") != std::string::npos);
  const auto tree = testing::read_tree(dir / "fra");
  CHECK(tree.contains("audit.json"));
  CHECK(tree.at("iterations.csv").rfind("iteration,threshold,features_before,removed,forced\n", 0) == 0);
  CHECK(tree.contains("survivors.csv"));

  const auto imp = cli({"importance", "--data", (dir / "data.csv").string(), "--method", "pfi",
                        "--model", "gbt", "--trees", "10", "--out", (dir / "pfi.csv").string()});
  INFO(imp.err);
  REQUIRE(imp.code == 0);
  const auto text = slurp(dir / "pfi.csv");
  CHECK(text.rfind("feature,score,rank,method\n", 0) == 0);
  CHECK(text.find("inf_") < text.find("noise_"));

  CHECK(cli({"importance", "--data", (dir / "data.csv").string(), "--method", "magic", "--out",
             (dir / "x.csv").string()})
            .code == 2);
}
