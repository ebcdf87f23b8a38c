// Monte Carlo experiment driver.
//
// One experiment = one scenario: the prior scatterers are drawn once from
// the master seed, the map and fingerprint database are built over them,
// and each trial then draws a fresh transmitter position plus fresh
// non-prior scatterers (the time-varying part of the environment, unknown
// to the offline databases), synthesizes the channel over all scatterers,
// and runs the selected methods. Everything is a pure function of
// (ScenarioConfig, master seed): per-trial sub-seeds come from the
// documented splitting rule in rng.hpp, so results are independent of the
// number of worker threads.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ckmloc/baselines.hpp"
#include "ckmloc/channel.hpp"
#include "ckmloc/ckm.hpp"
#include "ckmloc/detail/parallel.hpp"
#include "ckmloc/matching.hpp"
#include "ckmloc/scenario.hpp"
#include "ckmloc/solver.hpp"

namespace ckmloc {

struct MethodSelection {
  bool proposed = true;
  bool coarse = true;
  bool fingerprint = true;

  // Parses "proposed,coarse,fingerprint" subsets.
  static MethodSelection from_string(const std::string& csv) {
    MethodSelection sel{false, false, false};
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item == "proposed") sel.proposed = true;
      else if (item == "coarse") sel.coarse = true;
      else if (item == "fingerprint") sel.fingerprint = true;
      else if (!item.empty()) throw std::invalid_argument("unknown method: " + item);
    }
    if (!sel.proposed && !sel.coarse && !sel.fingerprint)
      throw std::invalid_argument("no methods selected");
    return sel;
  }
};

struct MethodOutcome {
  Point2 estimate;
  double error_m = 0.0;
};

struct TrialRecord {
  int trial_id = 0;
  std::uint64_t seed = 0;
  Point2 true_ue;
  std::optional<MethodOutcome> proposed, coarse, fingerprint;
  // diagnostics
  int n_channel_scatterers = 0;
  int n_obs_paths = 0;
  int n_priors = 0;
  bool fallback_used = false;
  int solver_iterations = 0;
  bool solver_converged = false;
};

/// Fixed environment scatterers of a scenario (one draw per master seed).
inline std::vector<Point2> draw_prior_scatterers(const ScenarioConfig& cfg) {
  Rng rng(derive_seed(cfg.master_seed, SeedStream::kScatterers, 0));
  std::vector<Point2> scatterers;
  scatterers.reserve(static_cast<std::size_t>(cfg.n_prior_scatterers));
  for (int i = 0; i < cfg.n_prior_scatterers; ++i)
    scatterers.push_back(rng.uniform_in(cfg.scatterer_region));
  return scatterers;
}

inline CkmBuildConfig ckm_build_config(const ScenarioConfig& cfg,
                                       const std::vector<Point2>& scatterers) {
  CkmBuildConfig b;
  b.bs = cfg.bs;
  b.region = cfg.ue_region;
  b.grid_spacing = cfg.grid_spacing_m;
  b.scatterers = scatterers;
  b.rf = cfg.rf;
  b.dict = cfg.dict();
  b.mode = cfg.ckm_mode;
  b.offline_snr_db = cfg.offline_snr_db;
  b.max_paths = cfg.max_paths;
  b.peak_threshold_rel = cfg.peak_threshold_rel;
  b.master_seed = cfg.master_seed;
  return b;
}

/// Simulates the observation of one trial (fresh transmitter, fresh
/// non-prior scatterers, fresh gains and noise).
inline ObservationSet simulate_trial_observation(const ScenarioConfig& cfg,
                                                 const std::vector<Point2>& prior_scatterers,
                                                 int trial_id, Point2* true_ue_out,
                                                 int* n_scatterers_out) {
  const std::uint64_t seed = derive_seed(cfg.master_seed, SeedStream::kTrial,
                                         static_cast<std::uint64_t>(trial_id));
  Rng rng(seed);
  const Point2 ue = rng.uniform_in(cfg.ue_region);
  std::vector<Point2> scatterers = prior_scatterers;
  for (int i = 0; i < cfg.n_add_scatterers; ++i)
    scatterers.push_back(rng.uniform_in(cfg.scatterer_region));

  Rng phase_rng(derive_seed(seed, SeedStream::kGainPhase, 0));
  const std::vector<PathParam> truth = true_paths(cfg.bs, ue, scatterers, phase_rng);

  ObservationSet obs;
  if (cfg.oracle.enabled) {
    obs = oracle_observation(truth, cfg.oracle.sigma_theta_rad, cfg.oracle.sigma_tau_s,
                             derive_seed(cfg.master_seed, SeedStream::kOracle,
                                         static_cast<std::uint64_t>(trial_id)),
                             cfg.max_paths);
  } else {
    const ChannelMatrix h =
        add_awgn(synth_channel(truth, cfg.rf), cfg.rf.snr_db,
                 derive_seed(cfg.master_seed, SeedStream::kNoise,
                             static_cast<std::uint64_t>(trial_id)));
    obs = estimate_paths(h, cfg.dict(), cfg.max_paths, cfg.peak_threshold_rel);
  }
  if (true_ue_out) *true_ue_out = ue;
  if (n_scatterers_out) *n_scatterers_out = static_cast<int>(scatterers.size());
  return obs;
}

/// Offline products of one scenario: the environment draw, the map, its
/// ranking cache, and the fingerprint database. Reusable across runs that
/// differ only in online settings (trial count, n_add, oracle flags).
struct ExperimentArtifacts {
  std::vector<Point2> prior_scatterers;
  Ckm ckm;
  RankingEngine engine;
  FingerprintDb fdb;
};

inline ExperimentArtifacts build_artifacts(const ScenarioConfig& cfg,
                                           bool with_fingerprint = true) {
  cfg.validate();
  std::vector<Point2> prior_scatterers = draw_prior_scatterers(cfg);
  Ckm map = build_ckm(ckm_build_config(cfg, prior_scatterers));
  RankingEngine engine(map, cfg.dict());
  FingerprintDb fdb;
  if (with_fingerprint) fdb = build_fingerprint_db(map, cfg.max_paths);
  return {std::move(prior_scatterers), std::move(map), std::move(engine), std::move(fdb)};
}

/// Runs the online trials against prebuilt offline artifacts. The
/// returned records are ordered by trial id regardless of thread
/// scheduling.
inline std::vector<TrialRecord> run_trials(const ScenarioConfig& cfg,
                                           const MethodSelection& methods,
                                           const ExperimentArtifacts& artifacts) {
  cfg.validate();
  if (artifacts.ckm.master_seed != cfg.master_seed)
    throw std::invalid_argument("run_trials: artifacts were built from a different master seed");
  if (methods.fingerprint && artifacts.fdb.locations.empty())
    throw std::invalid_argument("run_trials: artifacts lack a fingerprint database");
  const DictConfig dict = cfg.dict();

  LocalizeOptions opts;
  opts.k_cand = cfg.k_cand;
  opts.lambda_prior = cfg.lambda_prior;
  opts.engine = &artifacts.engine;

  std::vector<TrialRecord> records(static_cast<std::size_t>(cfg.n_trials));
  detail::parallel_for(records.size(), [&](std::size_t t) {
    TrialRecord rec;
    rec.trial_id = static_cast<int>(t);
    rec.seed = derive_seed(cfg.master_seed, SeedStream::kTrial, t);

    const ObservationSet obs =
        simulate_trial_observation(cfg, artifacts.prior_scatterers, rec.trial_id, &rec.true_ue,
                                   &rec.n_channel_scatterers);
    rec.n_obs_paths = static_cast<int>(obs.size());

    const CandidateSet candidates = artifacts.engine.rank(obs, cfg.k_cand);
    if (methods.proposed) {
      const LocalizationResult res =
          localize_with_candidates(obs, candidates, artifacts.ckm, dict, opts);
      rec.proposed = {res.ue_estimate, distance(res.ue_estimate, rec.true_ue)};
      rec.n_priors = static_cast<int>(res.priors.size());
      rec.fallback_used = res.fallback_used;
      rec.solver_iterations = res.iterations;
      rec.solver_converged = res.converged;
    }
    if (methods.coarse) {
      const Point2 est = barycenter(candidates);
      rec.coarse = {est, distance(est, rec.true_ue)};
    }
    if (methods.fingerprint) {
      const Point2 est =
          fingerprint_localize(fingerprint_feature(obs, cfg.max_paths), artifacts.fdb);
      rec.fingerprint = {est, distance(est, rec.true_ue)};
    }
    records[t] = rec;
  });
  return records;
}

/// Builds the offline artifacts and runs the trials in one call.
inline std::vector<TrialRecord> run_experiment(const ScenarioConfig& cfg,
                                               const MethodSelection& methods = {}) {
  return run_trials(cfg, methods, build_artifacts(cfg, methods.fingerprint));
}

// ---------------------------------------------------------------------------
// Metrics.

/// Root mean square of an error sample.
inline double rmse(const std::vector<double>& errors) {
  if (errors.empty()) throw std::invalid_argument("rmse: empty sample");
  double acc = 0.0;
  for (double e : errors) acc += e * e;
  return std::sqrt(acc / static_cast<double>(errors.size()));
}

/// Empirical CDF sampled at the sorted unique error values; the last
/// fraction is always 1.
inline std::vector<std::pair<double, double>> cdf(const std::vector<double>& errors) {
  if (errors.empty()) throw std::invalid_argument("cdf: empty sample");
  std::vector<double> sorted = errors;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::pair<double, double>> out;
  const auto n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    out.emplace_back(sorted[i], static_cast<double>(i + 1) / n);
  }
  return out;
}

/// Fraction of errors <= threshold.
inline double fraction_within(const std::vector<double>& errors, double threshold) {
  if (errors.empty()) throw std::invalid_argument("fraction_within: empty sample");
  std::size_t count = 0;
  for (double e : errors)
    if (e <= threshold) ++count;
  return static_cast<double>(count) / static_cast<double>(errors.size());
}

/// Nearest-rank percentile (q in (0, 1]).
inline double percentile(const std::vector<double>& errors, double q) {
  if (errors.empty()) throw std::invalid_argument("percentile: empty sample");
  if (!(q > 0.0) || q > 1.0) throw std::invalid_argument("percentile: q must be in (0, 1]");
  std::vector<double> sorted = errors;
  std::sort(sorted.begin(), sorted.end());
  const auto rank = static_cast<std::size_t>(
      std::ceil(q * static_cast<double>(sorted.size())));
  return sorted[std::min(sorted.size() - 1, rank == 0 ? 0 : rank - 1)];
}

/// Errors of one method across records, in trial order.
inline std::vector<double> collect_errors(const std::vector<TrialRecord>& records,
                                          const std::string& method) {
  std::vector<double> out;
  for (const TrialRecord& r : records) {
    const std::optional<MethodOutcome>* m = nullptr;
    if (method == "proposed") m = &r.proposed;
    else if (method == "coarse") m = &r.coarse;
    else if (method == "fingerprint") m = &r.fingerprint;
    else throw std::invalid_argument("collect_errors: unknown method " + method);
    if (m->has_value()) out.push_back((*m)->error_m);
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV output. Column orders are stable and documented in the README.

/// Per-trial errors: columns (trial, method, error_m), trials ascending,
/// methods in the fixed order proposed, coarse, fingerprint.
inline void write_trials_csv(const std::vector<TrialRecord>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_trials_csv: cannot open " + path);
  out << "trial,method,error_m\n";
  out << std::setprecision(10);
  for (const TrialRecord& r : records) {
    if (r.proposed) out << r.trial_id << ",proposed," << r.proposed->error_m << "\n";
    if (r.coarse) out << r.trial_id << ",coarse," << r.coarse->error_m << "\n";
    if (r.fingerprint) out << r.trial_id << ",fingerprint," << r.fingerprint->error_m << "\n";
  }
  if (!out) throw std::runtime_error("write_trials_csv: write failed for " + path);
}

/// Summary: columns (method, n_add, m, rmse_m, p50_m, p90_m), one row per
/// method present, in the fixed method order.
inline void write_summary_csv(const std::vector<TrialRecord>& records, const ScenarioConfig& cfg,
                              const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_summary_csv: cannot open " + path);
  out << "method,n_add,m,rmse_m,p50_m,p90_m\n";
  out << std::setprecision(10);
  for (const std::string method : {"proposed", "coarse", "fingerprint"}) {
    const std::vector<double> errors = collect_errors(records, method);
    if (errors.empty()) continue;
    out << method << "," << cfg.n_add_scatterers << "," << cfg.rf.n_antennas << ","
        << rmse(errors) << "," << percentile(errors, 0.5) << "," << percentile(errors, 0.9)
        << "\n";
  }
  if (!out) throw std::runtime_error("write_summary_csv: write failed for " + path);
}

} // namespace ckmloc
