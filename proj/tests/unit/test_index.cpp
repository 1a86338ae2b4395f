#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "cryptodiv/csv.hpp"
#include "cryptodiv/index.hpp"
#include "cryptodiv/random.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace cryptodiv;

namespace {

McapSnapshot random_snapshot(Rng& rng, std::size_t assets, double scale = 1e9) {
  McapSnapshot s{Date{2020, 1, 1}, {}};
  for (std::size_t i = 0; i < assets; ++i) {
    // Coarse values so ties actually occur.
    const double cap = std::floor(rng.uniform() * 50.0) * scale;
    s.caps.push_back({"A" + std::to_string(i), cap});
  }
  return s;
}

std::vector<Point> series_from(const std::vector<double>& v) {
  std::vector<Point> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back({Date{2020, 1, 1}.plus_days(static_cast<int>(i)), v[i]});
  }
  return out;
}

} // namespace

TEST_CASE("index_from_sum worked values") {
  CHECK(index_from_sum(1e10, 7) == doctest::Approx(1e10 / std::pow(10.0, 7)));
  CHECK(index_from_sum(1e10, 7) == doctest::Approx(1000.0));
  CHECK(index_from_sum(1e12, 7) == doctest::Approx(1e12 / 35831808.0).epsilon(1e-12));
  CHECK_THROWS_AS(index_from_sum(10.0, 7), IndexDomainError);
  CHECK_THROWS_AS(index_from_sum(5.0, 7), IndexDomainError);
  CHECK_NOTHROW(index_from_sum(10.5, 7));
}

TEST_CASE("select_top_n matches a sort-then-take oracle, ties by symbol") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto snap = random_snapshot(rng, 500);
    const auto got = select_top_n(snap, 100);
    const auto want = oracle::top_n(snap.caps, 100);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].symbol == want[i].symbol);
      CHECK(got[i].market_cap == want[i].market_cap);
    }
    double s = 0.0;
    for (const auto& c : want) s += c.market_cap;
    CHECK(top_n_sum(snap, 100) == doctest::Approx(s).epsilon(1e-12));
  }
  McapSnapshot few{Date{2020, 1, 1}, {{"b", 5e10}, {"a", 5e10}}};
  const auto two = select_top_n(few, 100);
  REQUIRE(two.size() == 2);
  CHECK(two[0].symbol == "a");
}

TEST_CASE("crypto100 is monotone in S and decreasing in the power") {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const double s1 = 1e8 + rng.uniform() * 1e13;
    const double s2 = s1 * (1.0 + rng.uniform());
    for (int p = 5; p <= 9; ++p) {
      CHECK(index_from_sum(s1, p) < index_from_sum(s2, p));
      CHECK(index_from_sum(s1, p + 1) < index_from_sum(s1, p));
    }
  }
  McapSnapshot snap{Date{2020, 1, 1}, {{"x", 6e9}, {"y", 4e9}}};
  CHECK(crypto100(snap, {100, 7}) == doctest::Approx(1000.0));
  // Below e^p the scaling term grows faster than S.
  CHECK(index_from_sum(100.0, 7) > index_from_sum(1000.0, 7));
}

TEST_CASE("swapping the last constituent for an equal cap leaves the index unchanged") {
  Rng rng(13);
  auto snap = random_snapshot(rng, 150);
  const auto top = select_top_n(snap, 100);
  const double before = crypto100(snap, {100, 7});
  for (auto& c : snap.caps) {
    if (c.symbol == top.back().symbol) c.symbol = "ZZ_replacement";
  }
  CHECK(crypto100(snap, {100, 7}) == before);
}

TEST_CASE("calibrate_power recovers the generating power") {
  Rng rng(5);
  for (int p_star = 5; p_star <= 9; ++p_star) {
    std::vector<double> sums, ref;
    for (int i = 0; i < 200; ++i) {
      const double s = std::pow(10.0, 9.0 + 3.0 * rng.uniform());
      sums.push_back(s);
      ref.push_back(index_from_sum(s, p_star) * std::exp(0.01 * rng.normal()));
    }
    const auto cal = calibrate_power(series_from(sums), series_from(ref));
    CHECK(cal.chosen_power == p_star);
    CHECK(cal.overlap_days == 200);
    REQUIRE(cal.table.size() == 5);
    CHECK(cal.table.front().power == 5);

    // A constant 0.1% scale error does not move the choice.
    std::vector<double> scaled = ref;
    for (auto& v : scaled) v *= 1.001;
    CHECK(calibrate_power(series_from(sums), series_from(scaled)).chosen_power == p_star);

    // Reordering the candidate list does not change the choice.
    const auto shuffled = calibrate_power(series_from(sums), series_from(ref), {9, 7, 5, 8, 6});
    CHECK(shuffled.chosen_power == p_star);
  }
}

TEST_CASE("calibrate_power needs enough overlapping days") {
  std::vector<double> sums(20, 1e10), ref(20, 1000.0);
  CHECK_THROWS(calibrate_power(series_from(sums), series_from(ref)));
}

TEST_CASE("load_mcaps and compute_index") {
  const auto dir = testing::temp_dir("index_load");
  {
    std::ofstream f(dir / "m.csv");
    f << "date,asset,market_cap_usd\n"
         "2020-01-02,a,6e9\n2020-01-01,a,5e9\n2020-01-01,b,5e9\n2020-01-02,b,4e9\n";
  }
  const auto snaps = load_mcaps(dir / "m.csv");
  REQUIRE(snaps.size() == 2);
  CHECK(snaps[0].date == Date{2020, 1, 1});
  const auto rows = compute_index(snaps, {100, 7});
  CHECK(rows[0].value == doctest::Approx(1000.0));
  CHECK(rows[1].sum_mcap == doctest::Approx(1e10));
  const auto csv = index_csv(rows);
  CHECK(csv.rfind("date,sum_mcap,index_value,power\n", 0) == 0);
  {
    std::ofstream f(dir / "i.csv");
    f << csv;
  }
  const auto back = load_index_csv(dir / "i.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[1].value == doctest::Approx(rows[1].value).epsilon(1e-15));

  {
    std::ofstream f(dir / "bad.csv");
    f << "date,asset,market_cap_usd\n2020-01-01,a,-5\n";
  }
  CHECK_THROWS_AS(load_mcaps(dir / "bad.csv"), InputError);
}
