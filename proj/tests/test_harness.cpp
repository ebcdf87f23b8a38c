#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "ckmloc/harness.hpp"

using namespace ckmloc;
using Catch::Approx;

namespace {

ScenarioConfig tiny_scenario() {
  ScenarioConfig cfg;
  cfg.bs = {0.0, 0.0};
  cfg.scatterer_region = {10.0, 50.0, -40.0, 40.0};
  cfg.ue_region = {50.0, 54.0, -2.0, 2.0};
  cfg.n_prior_scatterers = 3;
  cfg.n_add_scatterers = 0;
  cfg.rf.n_antennas = 8;
  cfg.rf.n_subcarriers = 128;
  cfg.rf.bandwidth_hz = 100e6;
  cfg.rf.snr_db = 35.0;
  cfg.n_theta = 16;
  cfg.n_tau = 128;
  cfg.k_cand = 5;
  cfg.max_paths = 6;
  cfg.n_trials = 4;
  cfg.master_seed = 2024;
  cfg.ckm_mode = CkmMode::kTrueGeometry;
  return cfg;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

} // namespace

TEST_CASE("metrics") {
  SECTION("rmse") {
    CHECK(rmse({3.0, 4.0}) == Approx(std::sqrt(12.5)).margin(1e-12));
    CHECK(rmse({0.0, 0.0, 0.0}) == 0.0);
    CHECK(rmse({2.5}) == 2.5);
    CHECK_THROWS_AS(rmse({}), std::invalid_argument);
  }
  SECTION("cdf") {
    const auto c = cdf({1.0, 2.0, 3.0});
    REQUIRE(c.size() == 3);
    CHECK(c[1].first == 2.0);
    CHECK(c[1].second == Approx(2.0 / 3.0));
    CHECK(c.back().second == 1.0);

    const auto step = cdf({5.0, 5.0, 5.0});
    REQUIRE(step.size() == 1);
    CHECK(step[0] == std::pair{5.0, 1.0});

    double last = 0.0;
    for (const auto& [t, f] : cdf({0.3, 9.0, 1.2, 0.3, 4.4})) {
      CHECK(f >= last);
      last = f;
    }
    CHECK(last == 1.0);
    CHECK_THROWS_AS(cdf({}), std::invalid_argument);
  }
  SECTION("fraction_within") {
    CHECK(fraction_within({1.0, 2.0, 3.0}, 2.0) == Approx(2.0 / 3.0));
    CHECK(fraction_within({1.0, 2.0, 3.0}, 0.5) == 0.0);
    CHECK(fraction_within({1.0, 2.0, 3.0}, 3.0) == 1.0);
  }
  SECTION("percentile (nearest rank)") {
    const std::vector<double> v = {5.0, 1.0, 3.0, 2.0, 4.0};
    CHECK(percentile(v, 0.5) == 3.0);
    CHECK(percentile(v, 0.9) == 5.0);
    CHECK(percentile(v, 1.0) == 5.0);
    CHECK_THROWS_AS(percentile(v, 0.0), std::invalid_argument);
  }
  SECTION("rmse dominates the mean absolute error") {
    Rng rng(17);
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<double> v;
      for (int i = 0; i < 50; ++i) v.push_back(std::abs(rng.gaussian()) * 3.0);
      double mean = 0.0;
      for (double e : v) mean += e / 50.0;
      CHECK(rmse(v) >= mean - 1e-12);
      CHECK(mean >= 0.0);
    }
  }
}

TEST_CASE("experiments are a pure function of the master seed") {
  const ScenarioConfig cfg = tiny_scenario();
  const auto a = run_experiment(cfg);
  const auto b = run_experiment(cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].true_ue == b[i].true_ue);
    REQUIRE(a[i].proposed.has_value());
    CHECK(a[i].proposed->estimate == b[i].proposed->estimate);
    CHECK(a[i].coarse->estimate == b[i].coarse->estimate);
    CHECK(a[i].fingerprint->estimate == b[i].fingerprint->estimate);
    CHECK(a[i].seed == b[i].seed);
  }
  ScenarioConfig other = cfg;
  other.master_seed += 1;
  const auto c = run_experiment(other);
  CHECK(c[0].true_ue.x != a[0].true_ue.x);
}

TEST_CASE("added scatterers enter the channel but not the databases") {
  ScenarioConfig cfg = tiny_scenario();
  cfg.n_add_scatterers = 2;
  cfg.n_trials = 2;
  const auto records = run_experiment(cfg);
  for (const TrialRecord& r : records) CHECK(r.n_channel_scatterers == 5);

  cfg.n_add_scatterers = 8;
  cfg.n_prior_scatterers = 15;
  cfg.n_trials = 1;
  const auto records2 = run_experiment(cfg);
  CHECK(records2[0].n_channel_scatterers == 23);
}

TEST_CASE("noiseless oracle trial on an exact map is solved almost exactly") {
  ScenarioConfig cfg = tiny_scenario();
  cfg.oracle.enabled = true;
  cfg.rf.snr_db = std::numeric_limits<double>::infinity();
  cfg.n_trials = 1;
  const auto records = run_experiment(cfg);
  REQUIRE(records[0].proposed.has_value());
  CHECK_FALSE(records[0].fallback_used);
  CHECK(records[0].proposed->error_m < 1e-2);
}

TEST_CASE("method selection") {
  const MethodSelection sel = MethodSelection::from_string("proposed,fingerprint");
  CHECK(sel.proposed);
  CHECK_FALSE(sel.coarse);
  CHECK(sel.fingerprint);
  CHECK_THROWS_AS(MethodSelection::from_string("bogus"), std::invalid_argument);
  CHECK_THROWS_AS(MethodSelection::from_string(""), std::invalid_argument);

  ScenarioConfig cfg = tiny_scenario();
  cfg.n_trials = 1;
  const auto records = run_experiment(cfg, sel);
  CHECK(records[0].proposed.has_value());
  CHECK_FALSE(records[0].coarse.has_value());
  CHECK(records[0].fingerprint.has_value());
}

TEST_CASE("csv outputs have the documented shape") {
  ScenarioConfig cfg = tiny_scenario();
  cfg.n_trials = 3;
  const auto records = run_experiment(cfg);
  const std::string tpath = temp_path("ckmloc_trials.csv");
  const std::string spath = temp_path("ckmloc_summary.csv");
  write_trials_csv(records, tpath);
  write_summary_csv(records, cfg, spath);

  std::ifstream tin(tpath);
  std::string line;
  REQUIRE(std::getline(tin, line));
  CHECK(line == "trial,method,error_m");
  int rows = 0;
  std::string first_data;
  while (std::getline(tin, line)) {
    if (rows == 0) first_data = line;
    ++rows;
  }
  CHECK(rows == 3 * 3); // three methods per trial
  CHECK(first_data.rfind("0,proposed,", 0) == 0);

  std::ifstream sin(spath);
  REQUIRE(std::getline(sin, line));
  CHECK(line == "method,n_add,m,rmse_m,p50_m,p90_m");
  int srows = 0;
  while (std::getline(sin, line)) {
    if (srows == 0) CHECK(line.rfind("proposed,0,8,", 0) == 0);
    ++srows;
  }
  CHECK(srows == 3);
  std::remove(tpath.c_str());
  std::remove(spath.c_str());
}

TEST_CASE("scenario files round trip") {
  ScenarioConfig cfg = tiny_scenario();
  cfg.oracle.enabled = true;
  cfg.oracle.sigma_theta_rad = 1e-3;
  const std::string path = temp_path("ckmloc_scenario.json");
  save_scenario(cfg, path);
  const ScenarioConfig loaded = load_scenario(path);
  CHECK(loaded.bs == cfg.bs);
  CHECK(loaded.ue_region.xmax == cfg.ue_region.xmax);
  CHECK(loaded.n_prior_scatterers == cfg.n_prior_scatterers);
  CHECK(loaded.rf.n_antennas == cfg.rf.n_antennas);
  CHECK(loaded.rf.snr_db == cfg.rf.snr_db);
  CHECK(loaded.n_theta == cfg.n_theta);
  CHECK(loaded.master_seed == cfg.master_seed);
  CHECK(loaded.ckm_mode == cfg.ckm_mode);
  CHECK(loaded.oracle.enabled);
  CHECK(loaded.oracle.sigma_theta_rad == cfg.oracle.sigma_theta_rad);

  SECTION("unsupported version is rejected") {
    std::ifstream in(path);
    nlohmann::json j = nlohmann::json::parse(in);
    in.close();
    j["version"] = 42;
    std::ofstream out(path);
    out << j.dump();
    out.close();
    CHECK_THROWS_WITH(load_scenario(path), Catch::Matchers::ContainsSubstring("version"));
  }
  std::remove(path.c_str());
}
