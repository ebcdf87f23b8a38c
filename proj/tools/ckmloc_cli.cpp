// Command-line front end: offline map construction, single-shot
// localization, and Monte Carlo experiments. See README.md for the file
// formats and output schemas.

#include <CLI11.hpp>

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <string>

#include "ckmloc/baselines.hpp"
#include "ckmloc/ckm.hpp"
#include "ckmloc/harness.hpp"
#include "ckmloc/scenario.hpp"
#include "ckmloc/solver.hpp"

namespace {

int cmd_build_ckm(const std::string& scenario_path, const std::string& out_path,
                  const std::string& mode, std::uint64_t seed) {
  ckmloc::ScenarioConfig cfg = ckmloc::load_scenario(scenario_path);
  cfg.master_seed = seed;
  cfg.ckm_mode = ckmloc::ckm_mode_from_string(mode);
  const std::vector<ckmloc::Point2> scatterers = ckmloc::draw_prior_scatterers(cfg);
  const ckmloc::Ckm map = ckmloc::build_ckm(ckmloc::ckm_build_config(cfg, scatterers));
  ckmloc::save_ckm(map, out_path);

  std::size_t usable = 0, paths = 0;
  for (const auto& e : map.entries) {
    if (!e.paths.empty()) ++usable;
    paths += e.paths.size();
  }
  std::cout << "wrote " << out_path << ": " << map.nx << "x" << map.ny << " grid, " << usable
            << "/" << map.entries.size() << " usable entries, "
            << static_cast<double>(paths) / static_cast<double>(map.entries.size())
            << " paths/entry (" << ckmloc::to_string(map.mode) << " mode)\n";
  return 0;
}

int cmd_localize(const std::string& ckm_path, const std::string& scenario_path,
                 std::uint64_t seed, bool oracle_mode) {
  ckmloc::ScenarioConfig cfg = ckmloc::load_scenario(scenario_path);
  const ckmloc::Ckm map = ckmloc::load_ckm(ckm_path);
  if (oracle_mode) cfg.oracle.enabled = true;

  // The map file records the seed its environment was drawn from; the
  // trial must see the same prior scatterers.
  cfg.master_seed = map.master_seed;
  const std::vector<ckmloc::Point2> prior_scatterers = ckmloc::draw_prior_scatterers(cfg);

  // --seed selects the trial (transmitter draw, added scatterers, noise).
  ckmloc::Point2 true_ue;
  int n_scatterers = 0;
  ckmloc::ScenarioConfig trial_cfg = cfg;
  trial_cfg.master_seed = seed;
  const ckmloc::ObservationSet obs = ckmloc::simulate_trial_observation(
      trial_cfg, prior_scatterers, 0, &true_ue, &n_scatterers);

  ckmloc::LocalizeOptions opts;
  opts.k_cand = cfg.k_cand;
  opts.lambda_prior = cfg.lambda_prior;
  const ckmloc::LocalizationResult res = ckmloc::localize(obs, map, cfg.dict(), opts);

  nlohmann::json j;
  j["true_ue"] = {true_ue.x, true_ue.y};
  j["estimate"] = {res.ue_estimate.x, res.ue_estimate.y};
  j["error_m"] = ckmloc::distance(res.ue_estimate, true_ue);
  j["coarse_estimate"] = {res.coarse_estimate.x, res.coarse_estimate.y};
  j["coarse_error_m"] = ckmloc::distance(res.coarse_estimate, true_ue);
  j["n_channel_scatterers"] = n_scatterers;
  j["n_observed_paths"] = obs.size();
  j["n_priors_selected"] = res.priors.size();
  j["fallback_used"] = res.fallback_used;
  j["iterations"] = res.iterations;
  j["converged"] = res.converged;
  j["final_objective"] = res.final_objective;
  nlohmann::json scat = nlohmann::json::array();
  for (const auto& s : res.scatterer_estimates) scat.push_back({s.x, s.y});
  j["scatterer_estimates"] = std::move(scat);
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_experiment(const std::string& config_path, const std::string& out_dir,
                   std::uint64_t seed, int trials_override, const std::string& methods_csv) {
  ckmloc::ScenarioConfig cfg = ckmloc::load_scenario(config_path);
  cfg.master_seed = seed;
  if (trials_override > 0) cfg.n_trials = trials_override;
  const ckmloc::MethodSelection methods = ckmloc::MethodSelection::from_string(methods_csv);

  std::filesystem::create_directories(out_dir);
  const std::vector<ckmloc::TrialRecord> records = ckmloc::run_experiment(cfg, methods);
  const std::string trials_path = out_dir + "/trials.csv";
  const std::string summary_path = out_dir + "/summary.csv";
  ckmloc::write_trials_csv(records, trials_path);
  ckmloc::write_summary_csv(records, cfg, summary_path);

  std::cout << std::setprecision(4);
  for (const std::string m : {"proposed", "coarse", "fingerprint"}) {
    const std::vector<double> errors = ckmloc::collect_errors(records, m);
    if (errors.empty()) continue;
    std::cout << m << ": rmse " << ckmloc::rmse(errors) << " m, p50 "
              << ckmloc::percentile(errors, 0.5) << " m, p90 "
              << ckmloc::percentile(errors, 0.9) << " m ("
              << errors.size() << " trials)\n";
  }
  std::cout << "wrote " << trials_path << " and " << summary_path << "\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"angle-delay map localization toolkit"};
  app.require_subcommand(1);

  std::string scenario_path, out_path, ckm_path, mode = "estimated";
  std::string config_path, out_dir, methods = "proposed,coarse,fingerprint";
  std::uint64_t seed = 1;
  int trials = 0;
  bool oracle_mode = false;

  CLI::App* build = app.add_subcommand("build-ckm", "build a channel knowledge map offline");
  build->add_option("--scenario", scenario_path, "scenario JSON")->required();
  build->add_option("--out", out_path, "output map file")->required();
  build->add_option("--mode", mode, "true|estimated")->required()
      ->check(CLI::IsMember({"true", "true-geometry", "estimated"}));
  build->add_option("--seed", seed, "environment master seed")->required();

  CLI::App* loc = app.add_subcommand("localize", "simulate and localize one transmitter");
  loc->add_option("--ckm", ckm_path, "map file from build-ckm")->required();
  loc->add_option("--scenario", scenario_path, "scenario JSON")->required();
  loc->add_option("--seed", seed, "trial seed")->required();
  loc->add_flag("--oracle-mode", oracle_mode, "bypass the extraction front end");

  CLI::App* exp = app.add_subcommand("experiment", "run a Monte Carlo experiment");
  exp->add_option("--config", config_path, "scenario JSON")->required();
  exp->add_option("--out-dir", out_dir, "directory for CSV outputs")->required();
  exp->add_option("--seed", seed, "master seed")->required();
  exp->add_option("--trials", trials, "override the configured trial count");
  exp->add_option("--methods", methods, "comma list of proposed,coarse,fingerprint");

  CLI11_PARSE(app, argc, argv);

  try {
    if (build->parsed()) return cmd_build_ckm(scenario_path, out_path, mode, seed);
    if (loc->parsed()) return cmd_localize(ckm_path, scenario_path, seed, oracle_mode);
    if (exp->parsed()) return cmd_experiment(config_path, out_dir, seed, trials, methods);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
