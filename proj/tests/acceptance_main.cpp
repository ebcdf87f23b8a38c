// Acceptance suite. Two groups:
//   properties   - fast self-contained checks (no replication targets)
//   replication  - Monte Carlo benchmark targets at the production scale
// Each criterion prints one PASS/FAIL line; the exit code is nonzero if
// any selected criterion fails.

#include <cstdio>
#include <cstring>
#include <iostream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "ckmloc/baselines.hpp"
#include "ckmloc/harness.hpp"
#include "ckmloc/solver.hpp"

using namespace ckmloc;

namespace {

bool g_all_pass = true;

void report(int criterion, bool pass, const std::string& text) {
  std::printf("%s  criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, text.c_str());
  std::fflush(stdout);
  if (!pass) g_all_pass = false;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// --- criterion 1: geometry roundtrip -----------------------------------

void criterion_geometry_roundtrip() {
  Rng rng(101);
  double worst = 0.0;
  int failures = 0;
  for (int i = 0; i < 10000; ++i) {
    const Point2 bs = rng.uniform_in({-5.0, 5.0, -5.0, 5.0});
    const Point2 s = rng.uniform_in({10.0, 60.0, -50.0, 50.0});
    const Point2 ue = rng.uniform_in({40.0, 90.0, -50.0, 50.0});
    const PathParam p = forward_path(bs, ue, s);
    const double err = distance(scatterer_from_path(bs, ue, p.aoa, p.toa), s);
    worst = std::max(worst, err);
    if (!(err < 1e-6)) ++failures;
  }
  report(1, failures == 0,
         "geometry roundtrip, 1e4 random triples: worst error " + fmt(worst) + " m (< 1e-6), " +
             std::to_string(failures) + " failures");
}

// --- criterion 2: closed form vs explicit projection --------------------

void criterion_spectrum_equivalence() {
  DictConfig d;
  d.n_antennas = 16;
  d.n_subcarriers = 64;
  d.n_theta = 32;
  d.n_tau = 64;
  d.subcarrier_spacing_hz = 100e6 / 1024;
  Rng rng(202);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<PathParam> paths;
    const int count = 1 + static_cast<int>(rng.uniform(0.0, 6.0));
    for (int i = 0; i < count; ++i)
      paths.push_back({rng.uniform(-1.4, 1.4),
                       rng.uniform(1e-9, 0.95 / d.subcarrier_spacing_hz), {}});
    const AngleDelayMap closed = dirichlet_map(paths, d);
    const AngleDelayMap projected = power_map(snapshot(paths, d), d);
    const double peak = std::max(closed.values.maxCoeff(), projected.values.maxCoeff());
    worst = std::max(worst, (closed.values - projected.values).cwiseAbs().maxCoeff() / peak);
  }
  report(2, worst < 1e-9,
         "closed-form vs projected maps, 100 random path sets: max peak-relative deviation " +
             fmt(worst) + " (< 1e-9)");
}

// --- criterion 3: assignment optimality ----------------------------------

double brute_force(const Eigen::MatrixXd& cost, int row, unsigned used, int skips) {
  if (row == cost.rows()) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (int c = 0; c < cost.cols(); ++c)
    if (!(used & (1u << c)))
      best = std::min(best, cost(row, c) + brute_force(cost, row + 1, used | (1u << c), skips));
  if (skips > 0) best = std::min(best, brute_force(cost, row + 1, used, skips - 1));
  return best;
}

void criterion_assignment() {
  Rng rng(303);
  double worst = 0.0;
  int failures = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const int rows = 1 + static_cast<int>(rng.uniform(0.0, 5.0));
    const int cols = 1 + static_cast<int>(rng.uniform(0.0, 7.0));
    Eigen::MatrixXd c(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int j = 0; j < cols; ++j) c(r, j) = rng.uniform(0.0, 50.0);
    const double ours = solve_assignment(c).total_cost;
    const double exact = brute_force(c, 0, 0u, std::max(0, rows - cols));
    worst = std::max(worst, std::abs(ours - exact));
    if (std::abs(ours - exact) > 1e-9) ++failures;
  }
  report(3, failures == 0,
         "assignment vs exhaustive minimum, 200 random rectangles: worst total-cost gap " +
             fmt(worst) + ", " + std::to_string(failures) + " mismatches");
}

// --- criterion 4: solver jacobian ----------------------------------------

void criterion_jacobian() {
  Rng rng(404);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    NlsProblem p;
    p.bs = {0.0, 0.0};
    p.lambda_prior = 2.0;
    const int n = 2 + static_cast<int>(rng.uniform(0.0, 4.0));
    const Point2 ue = rng.uniform_in({50.0, 80.0, -40.0, 40.0});
    for (int l = 0; l < n; ++l) {
      const Point2 s = rng.uniform_in({10.0, 50.0, -40.0, 40.0});
      const PathParam path = forward_path(p.bs, ue, s);
      p.aoa.push_back(path.aoa);
      p.toa.push_back(path.toa);
      p.weight.push_back(rng.uniform(0.5, 1.0));
      p.prior.push_back({s.x + rng.gaussian(), s.y + rng.gaussian()});
    }
    Eigen::VectorXd x(2 + n);
    x(0) = ue.x + 2.0 * rng.gaussian();
    x(1) = ue.y + 2.0 * rng.gaussian();
    for (int l = 0; l < n; ++l)
      x(2 + l) = distance(p.prior[static_cast<std::size_t>(l)], p.bs) +
                 std::abs(rng.gaussian()) + 1.0;

    const Eigen::MatrixXd analytic = nls_jacobian(p, x);
    Eigen::MatrixXd fd(analytic.rows(), analytic.cols());
    const double h = 1e-6;
    for (Eigen::Index c = 0; c < x.size(); ++c) {
      Eigen::VectorXd xp = x, xm = x;
      xp(c) += h;
      xm(c) -= h;
      fd.col(c) = (nls_residuals(p, xp) - nls_residuals(p, xm)) / (2.0 * h);
    }
    worst = std::max(worst, (analytic - fd).cwiseAbs().maxCoeff());
  }
  report(4, worst < 1e-5,
         "analytic vs central-difference jacobian, 100 random points: max abs diff " +
             fmt(worst) + " (< 1e-5)");
}

// --- criterion 5: zero-noise well-posedness ------------------------------

void criterion_zero_noise() {
  ScenarioConfig cfg; // production-scale defaults
  cfg.ckm_mode = CkmMode::kTrueGeometry;
  cfg.master_seed = 2025;
  const std::vector<Point2> scatterers = draw_prior_scatterers(cfg);
  const Ckm map = build_ckm(ckm_build_config(cfg, scatterers));
  const DictConfig dict = cfg.dict();
  const RankingEngine engine(map, dict);

  // transmitter exactly on a grid node; exact observation
  const Point2 ue = map.node_location(15, 40);
  Rng phase(7);
  const ObservationSet obs = true_paths(cfg.bs, ue, scatterers, phase);
  LocalizeOptions opts;
  opts.k_cand = cfg.k_cand;
  opts.lambda_prior = cfg.lambda_prior;
  opts.engine = &engine;
  const LocalizationResult res = localize(obs, map, dict, opts);
  const double err = distance(res.ue_estimate, ue);
  report(5, err < 1e-3,
         "zero-noise localization from a grid node: error " + fmt(err) + " m (< 1e-3)");
}

// --- replication ----------------------------------------------------------

struct RunStats {
  std::map<std::string, std::vector<double>> errors;
};

RunStats collect(const std::vector<TrialRecord>& records) {
  RunStats stats;
  for (const std::string m : {"proposed", "coarse", "fingerprint"}) {
    auto errs = collect_errors(records, m);
    if (!errs.empty()) stats.errors[m] = std::move(errs);
  }
  return stats;
}

void replication_criteria() {
  constexpr int kTrials = 200;
  constexpr std::uint64_t kSeed = 12345;

  ScenarioConfig base; // production-scale defaults
  base.n_trials = kTrials;
  base.master_seed = kSeed;

  std::printf("# replication runs: %d trials each, master seed %llu\n", kTrials,
              static_cast<unsigned long long>(kSeed));
  std::fflush(stdout);

  const MethodSelection all{true, true, true};
  const MethodSelection proposed_only{true, false, false};

  // The offline stage does not depend on n_add, so one set of artifacts
  // serves the whole interference sweep.
  std::map<int, RunStats> by_nadd;
  {
    const ExperimentArtifacts artifacts = build_artifacts(base);
    for (const int nadd : {0, 4, 8}) {
      ScenarioConfig cfg = base;
      cfg.n_add_scatterers = nadd;
      by_nadd[nadd] = collect(run_trials(cfg, all, artifacts));
      std::printf("#   n_add=%d done: proposed rmse %s m\n", nadd,
                  fmt(rmse(by_nadd[nadd].errors.at("proposed"))).c_str());
      std::fflush(stdout);
    }
  }
  std::map<int, double> rmse_by_m;
  rmse_by_m[32] = rmse(by_nadd[0].errors.at("proposed"));
  for (const int m : {16, 64}) {
    ScenarioConfig cfg = base;
    cfg.rf.n_antennas = m;
    rmse_by_m[m] = rmse(collect(run_experiment(cfg, proposed_only)).errors.at("proposed"));
    std::printf("#   M=%d done: proposed rmse %s m\n", m, fmt(rmse_by_m[m]).c_str());
    std::fflush(stdout);
  }

  // criterion 6
  {
    const auto& e = by_nadd[0].errors.at("proposed");
    const double r = rmse(e);
    const double frac1 = fraction_within(e, 1.0);
    report(6, r <= 1.0 && frac1 >= 0.90,
           "clean scene: proposed rmse " + fmt(r) + " m (<= 1.0), fraction within 1 m " +
               fmt(frac1) + " (>= 0.90)");
  }
  // criterion 7
  {
    const double rp = rmse(by_nadd[0].errors.at("proposed"));
    const double rc = rmse(by_nadd[0].errors.at("coarse"));
    const double rf = rmse(by_nadd[0].errors.at("fingerprint"));
    report(7, rc >= 2.0 * rp && rf >= 2.0 * rp,
           "baseline gap: coarse rmse " + fmt(rc) + " m, fingerprint rmse " + fmt(rf) +
               " m, both >= 2x proposed (" + fmt(rp) + " m)");
  }
  // criterion 8
  {
    const double r0 = rmse(by_nadd[0].errors.at("proposed"));
    const double r4 = rmse(by_nadd[4].errors.at("proposed"));
    const double r8 = rmse(by_nadd[8].errors.at("proposed"));
    const double frac2 = fraction_within(by_nadd[8].errors.at("proposed"), 2.0);
    bool beats = true;
    for (const int nadd : {0, 4, 8}) {
      const double rp = rmse(by_nadd[nadd].errors.at("proposed"));
      beats = beats && rp < rmse(by_nadd[nadd].errors.at("coarse")) &&
              rp < rmse(by_nadd[nadd].errors.at("fingerprint"));
    }
    const bool monotone = r0 <= r4 && r4 <= r8;
    report(8, monotone && r8 <= 3.0 && frac2 >= 0.50 && beats,
           "interference robustness: rmse " + fmt(r0) + " -> " + fmt(r4) + " -> " + fmt(r8) +
               " m (monotone, last <= 3.0), fraction within 2 m at n_add=8 " + fmt(frac2) +
               " (>= 0.50), proposed beats both baselines at every n_add: " +
               (beats ? "yes" : "no"));
  }
  // criterion 9
  {
    const bool ordered = rmse_by_m[64] <= 1.10 * rmse_by_m[32] &&
                         rmse_by_m[32] <= 1.10 * rmse_by_m[16];
    report(9, ordered,
           "array-size sweep: rmse M=16 " + fmt(rmse_by_m[16]) + " m, M=32 " +
               fmt(rmse_by_m[32]) + " m, M=64 " + fmt(rmse_by_m[64]) +
               " m (non-increasing within 10%)");
  }
}

} // namespace

int main(int argc, char** argv) {
  const std::string suite = argc > 1 ? argv[1] : "all";
  try {
    if (suite == "properties" || suite == "all") {
      criterion_geometry_roundtrip();
      criterion_spectrum_equivalence();
      criterion_assignment();
      criterion_jacobian();
      criterion_zero_noise();
    }
    if (suite == "replication" || suite == "all") {
      replication_criteria();
    }
    if (suite != "properties" && suite != "replication" && suite != "all") {
      std::cerr << "usage: acceptance [properties|replication|all]\n";
      return 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return g_all_pass ? 0 : 1;
}
