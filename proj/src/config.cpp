#include "cryptodiv/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "cryptodiv/csv.hpp"
#include "json_io.hpp"

namespace cryptodiv {

namespace fs = std::filesystem;

std::vector<EnsembleParams> GridFamily::expand(EnsembleKind kind) const {
  std::vector<EnsembleParams> out;
  const std::vector<double> rates =
      kind == EnsembleKind::GradientBoost && !learning_rate.empty() ? learning_rate
                                                                    : std::vector<double>{0.1};
  const std::vector<FeatureSampling> sampling =
      features_per_split.empty() ? std::vector{FeatureSampling::all()} : features_per_split;
  const std::vector<std::size_t> leaves =
      min_samples_leaf.empty() ? std::vector<std::size_t>{1} : min_samples_leaf;
  for (auto n : n_estimators) {
    for (const auto& d : max_depth) {
      for (auto split : min_samples_split) {
        for (auto leaf : leaves) {
          for (const auto& f : sampling) {
            for (double lr : rates) {
              EnsembleParams p;
              p.kind = kind;
              p.n_estimators = n;
              p.max_depth = d;
              p.min_samples_split = split;
              p.min_samples_leaf = leaf;
              p.features_per_split = f;
              p.learning_rate = lr;
              p.bootstrap = bootstrap;
              out.push_back(p);
            }
          }
        }
      }
    }
  }
  return out;
}

GridFamily default_rf_grid() {
  GridFamily g;
  g.n_estimators = {100, 300};
  g.max_depth = {4, 8, 16};
  g.min_samples_split = {2, 10};
  g.min_samples_leaf = {1};
  g.features_per_split = {FeatureSampling::fraction(1.0 / 3.0), FeatureSampling::all()};
  return g;
}

GridFamily default_gbt_grid() {
  GridFamily g;
  g.n_estimators = {100, 300};
  g.max_depth = {4, 8, 16};
  g.min_samples_split = {2, 10};
  g.min_samples_leaf = {1};
  g.features_per_split = {FeatureSampling::all()};
  g.learning_rate = {0.05, 0.1};
  return g;
}

ExperimentConfig RunConfig::resolved() const {
  ExperimentConfig e = experiment;
  e.rf_grid = rf_grid.expand(EnsembleKind::RandomForest);
  e.gbt_grid = gbt_grid.expand(EnsembleKind::GradientBoost);
  if (e.rf_grid.size() == 1) {
    e.fra.rf = e.rf_grid.front();
    e.rf_grid.clear();
  }
  if (e.gbt_grid.size() == 1) {
    e.fra.gbt = e.gbt_grid.front();
    e.gbt_grid.clear();
  }
  return e;
}

void RunConfig::validate() const {
  if (manifest.empty()) throw std::invalid_argument("config: manifest is required");
  if (!fs::exists(manifest)) throw InputError(manifest.string() + ": manifest not found");
  const int sources = (index.mcaps ? 1 : 0) + (index.index_csv ? 1 : 0) + (index.price_csv ? 1 : 0);
  if (sources != 1) {
    throw std::invalid_argument("config: index needs exactly one of mcaps, index_csv, price_csv");
  }
  for (const auto& p : {index.mcaps, index.index_csv, index.price_csv}) {
    if (p && !fs::exists(*p)) throw InputError(p->string() + ": file not found");
  }
  if (index.params.top_n < 1 || index.params.power < 1) {
    throw std::invalid_argument("config: index top_n and power must be >= 1");
  }
  const auto e = resolved();
  if (e.periods.empty()) throw std::invalid_argument("config: periods must not be empty");
  if (e.windows.empty()) throw std::invalid_argument("config: windows must not be empty");
  for (int w : e.windows) {
    if (w < 1) throw std::invalid_argument("config: windows must be >= 1");
  }
  if (!(e.holdout > 0.0 && e.holdout < 1.0)) {
    throw std::invalid_argument("config: holdout must be in (0, 1)");
  }
  if (e.cv_folds < 2) throw std::invalid_argument("config: cv_folds must be >= 2");
  if (e.shapley.permutations < 1 || e.shapley.background_rows < 1 || e.shapley.explain_rows < 1) {
    throw std::invalid_argument("config: shapley sizes must be >= 1");
  }
  if (e.rf_grid.empty() && rf_grid.expand(EnsembleKind::RandomForest).empty()) {
    throw std::invalid_argument("config: grid.rf expands to no candidates");
  }
  if (e.gbt_grid.empty() && gbt_grid.expand(EnsembleKind::GradientBoost).empty()) {
    throw std::invalid_argument("config: grid.gbt expands to no candidates");
  }
  for (const auto& p : e.rf_grid) p.validate();
  for (const auto& p : e.gbt_grid) p.validate();
  e.fra.validate();
}

namespace {

class Reader {
public:
  Reader(std::string source, fs::path base) : source_(std::move(source)), base_(std::move(base)) {}

  [[noreturn]] void fail(const std::string& where, const std::string& what) const {
    throw std::invalid_argument(source_ + ": " + (where.empty() ? "<root>" : where) + ": " + what);
  }

  void keys(const json& j, const std::string& where, std::initializer_list<std::string_view> allowed) const {
    if (!j.is_object()) fail(where, "expected an object");
    for (const auto& [k, v] : j.items()) {
      if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
        fail(join(where, k), "unknown key");
      }
    }
  }

  template <typename T>
  T get(const json& j, const std::string& where) const {
    try {
      return j.get<T>();
    } catch (const json::exception&) {
      fail(where, "unexpected type " + std::string(j.type_name()));
    }
  }

  std::size_t count(const json& j, const std::string& where) const {
    if (!j.is_number_unsigned()) fail(where, "expected a non-negative integer");
    return j.get<std::size_t>();
  }

  double number(const json& j, const std::string& where) const {
    if (!j.is_number()) fail(where, "expected a number");
    return j.get<double>();
  }

  fs::path path(const json& j, const std::string& where) const {
    if (!j.is_string()) fail(where, "expected a path string");
    fs::path p = j.get<std::string>();
    return p.is_absolute() ? p : base_ / p;
  }

  template <typename F>
  auto list(const json& j, const std::string& where, F&& item) const {
    if (!j.is_array()) fail(where, "expected an array");
    std::vector<decltype(item(j, where))> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
      out.push_back(item(j[i], where + "[" + std::to_string(i) + "]"));
    }
    return out;
  }

  static std::string join(const std::string& a, const std::string& b) {
    return a.empty() ? b : a + "." + b;
  }

private:
  std::string source_;
  fs::path base_;
};

GridFamily read_grid(const Reader& r, const json& j, const std::string& where, GridFamily g,
                     bool boosting) {
  if (boosting) {
    r.keys(j, where, {"n_estimators", "max_depth", "min_samples_split", "min_samples_leaf",
                      "features_per_split", "learning_rate"});
  } else {
    r.keys(j, where, {"n_estimators", "max_depth", "min_samples_split", "min_samples_leaf",
                      "features_per_split", "bootstrap"});
  }
  auto counts = [&](const json& v, const std::string& w) { return r.count(v, w); };
  for (const auto& [k, v] : j.items()) {
    const auto w = Reader::join(where, k);
    if (k == "n_estimators") g.n_estimators = r.list(v, w, counts);
    if (k == "min_samples_split") g.min_samples_split = r.list(v, w, counts);
    if (k == "min_samples_leaf") g.min_samples_leaf = r.list(v, w, counts);
    if (k == "max_depth") {
      g.max_depth = r.list(v, w, [&](const json& d, const std::string& dw) {
        return d.is_null() ? std::optional<std::size_t>{} : std::optional(r.count(d, dw));
      });
    }
    if (k == "features_per_split") {
      g.features_per_split = r.list(v, w, [&](const json& f, const std::string& fw) {
        try {
          return sampling_from_json(f);
        } catch (const std::exception& e) {
          r.fail(fw, e.what());
        }
      });
    }
    if (k == "learning_rate") {
      g.learning_rate = r.list(v, w, [&](const json& x, const std::string& xw) {
        return r.number(x, xw);
      });
    }
    if (k == "bootstrap") g.bootstrap = r.get<bool>(v, w);
  }
  return g;
}

IndicatorKind parse_kind(const Reader& r, const json& j, const std::string& where) {
  const auto s = r.get<std::string>(j, where);
  if (s == "SMA") return IndicatorKind::SMA;
  if (s == "EMA") return IndicatorKind::EMA;
  r.fail(where, "battery kinds are SMA or EMA");
}

} // namespace

RunConfig parse_config(std::string_view text, const fs::path& base_dir, std::string_view source) {
  const Reader r(std::string(source), base_dir);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string(source) + ": " + e.what());
  }
  r.keys(j, "", {"manifest", "index", "output_dir", "seed", "periods", "windows", "holdout",
                 "jobs", "cleaning", "indicators", "fra", "grid", "cv_folds", "shapley"});

  RunConfig c;
  auto& e = c.experiment;
  for (const auto& [k, v] : j.items()) {
    if (k == "manifest") c.manifest = r.path(v, k);
    if (k == "output_dir") c.output_dir = r.path(v, k);
    if (k == "seed") {
      if (!v.is_number_unsigned()) r.fail(k, "expected an unsigned 64-bit integer");
      e.seed = v.get<std::uint64_t>();
    }
    if (k == "jobs") c.jobs = r.count(v, k);
    if (k == "holdout") e.holdout = r.number(v, k);
    if (k == "cv_folds") e.cv_folds = r.count(v, k);
    if (k == "periods") {
      e.periods = r.list(v, k, [&](const json& d, const std::string& w) {
        try {
          return Date::parse(r.get<std::string>(d, w));
        } catch (const std::invalid_argument& err) {
          r.fail(w, err.what());
        }
      });
    }
    if (k == "windows") {
      e.windows = r.list(v, k, [&](const json& d, const std::string& w) {
        if (!d.is_number_integer()) r.fail(w, "expected an integer");
        return d.get<int>();
      });
    }
    if (k == "index") {
      r.keys(v, k, {"mcaps", "index_csv", "price_csv", "power", "top_n"});
      for (const auto& [ik, iv] : v.items()) {
        const auto w = Reader::join(k, ik);
        if (ik == "mcaps") c.index.mcaps = r.path(iv, w);
        if (ik == "index_csv") c.index.index_csv = r.path(iv, w);
        if (ik == "price_csv") c.index.price_csv = r.path(iv, w);
        if (ik == "power") c.index.params.power = static_cast<int>(r.count(iv, w));
        if (ik == "top_n") c.index.params.top_n = r.count(iv, w);
      }
    }
    if (k == "cleaning") {
      r.keys(v, k, {"flat_run_max", "missing_ratio_max"});
      for (const auto& [ck, cv] : v.items()) {
        const auto w = Reader::join(k, ck);
        if (ck == "flat_run_max") e.cleaning.flat_run_max = static_cast<long>(r.count(cv, w));
        if (ck == "missing_ratio_max") e.cleaning.missing_ratio_max = r.number(cv, w);
      }
    }
    if (k == "indicators") {
      r.keys(v, k, {"enabled", "sources", "windows", "kinds"});
      for (const auto& [ik, iv] : v.items()) {
        const auto w = Reader::join(k, ik);
        if (ik == "enabled") e.indicators_enabled = r.get<bool>(iv, w);
        if (ik == "sources") e.indicators.sources = r.get<std::vector<std::string>>(iv, w);
        if (ik == "windows") {
          e.indicators.windows = r.list(iv, w, [&](const json& x, const std::string& xw) {
            return r.count(x, xw);
          });
        }
        if (ik == "kinds") {
          e.indicators.kinds = r.list(iv, w, [&](const json& x, const std::string& xw) {
            return parse_kind(r, x, xw);
          });
        }
      }
    }
    if (k == "fra") {
      r.keys(v, k, {"target_count", "corr_start", "corr_step", "top_k_union", "max_iterations",
                    "pfi_repeats"});
      for (const auto& [fk, fv] : v.items()) {
        const auto w = Reader::join(k, fk);
        if (fk == "target_count") e.fra.target_count = r.count(fv, w);
        if (fk == "corr_start") e.fra.corr_start = r.number(fv, w);
        if (fk == "corr_step") e.fra.corr_step = r.number(fv, w);
        if (fk == "top_k_union") e.fra.top_k_union = r.count(fv, w);
        if (fk == "max_iterations") e.fra.max_iterations = r.count(fv, w);
        if (fk == "pfi_repeats") e.fra.pfi_repeats = r.count(fv, w);
      }
    }
    if (k == "grid") {
      r.keys(v, k, {"rf", "gbt"});
      if (v.contains("rf")) c.rf_grid = read_grid(r, v["rf"], "grid.rf", c.rf_grid, false);
      if (v.contains("gbt")) c.gbt_grid = read_grid(r, v["gbt"], "grid.gbt", c.gbt_grid, true);
    }
    if (k == "shapley") {
      r.keys(v, k, {"background_rows", "explain_rows", "permutations"});
      for (const auto& [sk, sv] : v.items()) {
        const auto w = Reader::join(k, sk);
        if (sk == "background_rows") e.shapley.background_rows = r.count(sv, w);
        if (sk == "explain_rows") e.shapley.explain_rows = r.count(sv, w);
        if (sk == "permutations") e.shapley.permutations = r.count(sv, w);
      }
    }
  }
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError(path.string() + ": cannot read config");
  std::ostringstream s;
  s << f.rdbuf();
  return parse_config(s.str(), path.parent_path(), path.string());
}

namespace {

std::vector<std::string> split_commas(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = std::min(text.find(',', start), text.size());
    out.emplace_back(text.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

} // namespace

std::vector<Date> parse_date_list(std::string_view text) {
  std::vector<Date> out;
  for (const auto& s : split_commas(text)) out.push_back(Date::parse(s));
  return out;
}

std::vector<int> parse_int_list(std::string_view text) {
  std::vector<int> out;
  for (const auto& s : split_commas(text)) {
    int v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) {
      throw std::invalid_argument("not an integer: '" + s + "'");
    }
    out.push_back(v);
  }
  return out;
}

} // namespace cryptodiv
