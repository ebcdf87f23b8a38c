// Scenario description: deployment geometry, RF front end, projection
// grids, matching/solver constants, and experiment controls, with a
// versioned JSON file format.
#pragma once

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>

#include "ckmloc/channel.hpp"
#include "ckmloc/ckm.hpp"
#include "ckmloc/geometry.hpp"

namespace ckmloc {

inline constexpr int kScenarioFormatVersion = 1;

struct OracleConfig {
  bool enabled = false;
  double sigma_theta_rad = 0.0;
  double sigma_tau_s = 0.0;
};

struct ScenarioConfig {
  Point2 bs{0.0, 0.0};
  Rect scatterer_region{10.0, 50.0, -40.0, 40.0};
  Rect ue_region{50.0, 80.0, -40.0, 40.0};
  int n_prior_scatterers = 15;
  int n_add_scatterers = 0;
  RfConfig rf{};
  int n_theta = 256;
  int n_tau = 1024;
  double lambda_prior = 2.0;
  int k_cand = 10;
  double grid_spacing_m = 1.0;
  int n_trials = 500;
  std::uint64_t master_seed = 1;
  CkmMode ckm_mode = CkmMode::kEstimated;
  double offline_snr_db = 30.0; // offline map construction SNR (estimated mode)
  int max_paths = 24;
  double peak_threshold_rel = 0.05;
  OracleConfig oracle{};

  DictConfig dict() const { return make_dict(rf, n_theta, n_tau); }

  void validate() const {
    scatterer_region.validate("scatterer_region");
    ue_region.validate("ue_region");
    rf.validate();
    dict();
    if (n_prior_scatterers < 1)
      throw std::invalid_argument("ScenarioConfig: need at least one prior scatterer");
    if (n_add_scatterers < 0)
      throw std::invalid_argument("ScenarioConfig: n_add_scatterers must be >= 0");
    if (!(grid_spacing_m > 0.0))
      throw std::invalid_argument("ScenarioConfig: grid spacing must be positive");
    if (n_trials < 1) throw std::invalid_argument("ScenarioConfig: n_trials must be >= 1");
    if (k_cand < 1) throw std::invalid_argument("ScenarioConfig: k_cand must be >= 1");
    if (!(lambda_prior > 0.0))
      throw std::invalid_argument("ScenarioConfig: lambda_prior must be > 0");
    if (max_paths < 1) throw std::invalid_argument("ScenarioConfig: max_paths must be >= 1");
  }
};

namespace detail {
inline nlohmann::json rect_json(const Rect& r) { return {r.xmin, r.xmax, r.ymin, r.ymax}; }
inline Rect rect_from_json(const nlohmann::json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>(),
          j.at(3).get<double>()};
}
} // namespace detail

inline void save_scenario(const ScenarioConfig& cfg, const std::string& path) {
  nlohmann::json j;
  j["format"] = "ckmloc-scenario";
  j["version"] = kScenarioFormatVersion;
  j["bs"] = {cfg.bs.x, cfg.bs.y};
  j["scatterer_region"] = detail::rect_json(cfg.scatterer_region);
  j["ue_region"] = detail::rect_json(cfg.ue_region);
  j["n_prior_scatterers"] = cfg.n_prior_scatterers;
  j["n_add_scatterers"] = cfg.n_add_scatterers;
  j["rf"] = {{"carrier_hz", cfg.rf.carrier_hz},
             {"bandwidth_hz", cfg.rf.bandwidth_hz},
             {"n_subcarriers", cfg.rf.n_subcarriers},
             {"n_antennas", cfg.rf.n_antennas},
             {"antenna_spacing_wavelengths", cfg.rf.antenna_spacing_wavelengths},
             {"snr_db", cfg.rf.snr_db}};
  j["dict"] = {{"n_theta", cfg.n_theta}, {"n_tau", cfg.n_tau}};
  j["lambda_prior"] = cfg.lambda_prior;
  j["k_cand"] = cfg.k_cand;
  j["grid_spacing_m"] = cfg.grid_spacing_m;
  j["n_trials"] = cfg.n_trials;
  j["master_seed"] = cfg.master_seed;
  j["ckm_mode"] = to_string(cfg.ckm_mode);
  j["offline_snr_db"] = cfg.offline_snr_db;
  j["max_paths"] = cfg.max_paths;
  j["peak_threshold_rel"] = cfg.peak_threshold_rel;
  j["oracle"] = {{"enabled", cfg.oracle.enabled},
                 {"sigma_theta_rad", cfg.oracle.sigma_theta_rad},
                 {"sigma_tau_s", cfg.oracle.sigma_tau_s}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_scenario: cannot open " + path);
  out << j.dump(2) << "\n";
}

inline ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_scenario: cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("load_scenario: " + path + ": " + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "ckmloc-scenario")
      throw std::runtime_error("load_scenario: " + path + ": not a scenario file");
    if (j.at("version").get<int>() != kScenarioFormatVersion)
      throw std::runtime_error("load_scenario: " + path + ": unsupported version " +
                               std::to_string(j.at("version").get<int>()));
    ScenarioConfig cfg;
    if (j.contains("bs")) cfg.bs = {j["bs"].at(0).get<double>(), j["bs"].at(1).get<double>()};
    if (j.contains("scatterer_region"))
      cfg.scatterer_region = detail::rect_from_json(j["scatterer_region"]);
    if (j.contains("ue_region")) cfg.ue_region = detail::rect_from_json(j["ue_region"]);
    cfg.n_prior_scatterers = j.value("n_prior_scatterers", cfg.n_prior_scatterers);
    cfg.n_add_scatterers = j.value("n_add_scatterers", cfg.n_add_scatterers);
    if (j.contains("rf")) {
      const auto& r = j["rf"];
      cfg.rf.carrier_hz = r.value("carrier_hz", cfg.rf.carrier_hz);
      cfg.rf.bandwidth_hz = r.value("bandwidth_hz", cfg.rf.bandwidth_hz);
      cfg.rf.n_subcarriers = r.value("n_subcarriers", cfg.rf.n_subcarriers);
      cfg.rf.n_antennas = r.value("n_antennas", cfg.rf.n_antennas);
      cfg.rf.antenna_spacing_wavelengths =
          r.value("antenna_spacing_wavelengths", cfg.rf.antenna_spacing_wavelengths);
      cfg.rf.snr_db = r.value("snr_db", cfg.rf.snr_db);
    }
    if (j.contains("dict")) {
      cfg.n_theta = j["dict"].value("n_theta", cfg.n_theta);
      cfg.n_tau = j["dict"].value("n_tau", cfg.n_tau);
    }
    cfg.lambda_prior = j.value("lambda_prior", cfg.lambda_prior);
    cfg.k_cand = j.value("k_cand", cfg.k_cand);
    cfg.grid_spacing_m = j.value("grid_spacing_m", cfg.grid_spacing_m);
    cfg.n_trials = j.value("n_trials", cfg.n_trials);
    cfg.master_seed = j.value("master_seed", cfg.master_seed);
    if (j.contains("ckm_mode")) cfg.ckm_mode = ckm_mode_from_string(j["ckm_mode"].get<std::string>());
    cfg.offline_snr_db = j.value("offline_snr_db", cfg.offline_snr_db);
    cfg.max_paths = j.value("max_paths", cfg.max_paths);
    cfg.peak_threshold_rel = j.value("peak_threshold_rel", cfg.peak_threshold_rel);
    if (j.contains("oracle")) {
      const auto& o = j["oracle"];
      cfg.oracle.enabled = o.value("enabled", cfg.oracle.enabled);
      cfg.oracle.sigma_theta_rad = o.value("sigma_theta_rad", cfg.oracle.sigma_theta_rad);
      cfg.oracle.sigma_tau_s = o.value("sigma_tau_s", cfg.oracle.sigma_tau_s);
    }
    cfg.validate();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("load_scenario: " + path + ": " + e.what());
  }
}

} // namespace ckmloc
