// Joint transmitter + scatterer estimation.
//
// Each observed path constrains its scatterer to the array-anchored ray
// of the measured arrival angle, which reduces the scatterer to a single
// ray distance d_l >= 0. The remaining unknowns [ue_x, ue_y, d_1..d_L]
// are found by weighted nonlinear least squares with two residuals per
// path:
//
//   r_delay = sqrt(w_l)          * (|ue - s_l| + d_l - c*toa_l)
//   r_prior = sqrt(lambda * w_l) * |s_l - prior_l|
//
// with s_l = bs + d_l * u(aoa_l). The sum of squares therefore equals
// the weighted delay-consistency error plus lambda times the weighted
// squared distance of each scatterer from its map prior. Minimization
// uses a self-contained Levenberg-Marquardt iteration with box clamping
// of the ray distances at zero.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ckmloc/channel.hpp"
#include "ckmloc/ckm.hpp"
#include "ckmloc/geometry.hpp"
#include "ckmloc/matching.hpp"

namespace ckmloc {

struct NlsProblem {
  Point2 bs;
  std::vector<double> aoa;     // measured arrival angles (anchor the rays)
  std::vector<double> toa;     // measured delays
  std::vector<double> weight;  // per-path match confidence w in (0, 1]
  std::vector<Point2> prior;   // scatterer priors from the map
  double lambda_prior = 2.0;

  std::size_t n_paths() const { return aoa.size(); }
  void validate() const {
    if (aoa.size() != toa.size() || aoa.size() != weight.size() || aoa.size() != prior.size())
      throw std::invalid_argument("NlsProblem: field lengths disagree");
    if (aoa.empty()) throw std::invalid_argument("NlsProblem: no paths");
    if (!(lambda_prior > 0.0)) throw std::invalid_argument("NlsProblem: lambda_prior must be > 0");
  }
};

/// Residual vector of length 2 * n_paths for params [ue_x, ue_y, d_1..d_L].
inline Eigen::VectorXd nls_residuals(const NlsProblem& p, const Eigen::VectorXd& params) {
  const auto n = static_cast<Eigen::Index>(p.n_paths());
  if (params.size() != 2 + n) throw std::invalid_argument("nls_residuals: bad parameter size");
  const Point2 ue{params(0), params(1)};
  Eigen::VectorXd r(2 * n);
  for (Eigen::Index l = 0; l < n; ++l) {
    const double d = params(2 + l);
    const Point2 u = unit_vector(p.aoa[l]);
    const Point2 s = p.bs + d * u;
    const double sw = std::sqrt(p.weight[l]);
    r(2 * l) = sw * (distance(ue, s) + d - kSpeedOfLight * p.toa[l]);
    r(2 * l + 1) = std::sqrt(p.lambda_prior) * sw * distance(s, p.prior[l]);
  }
  return r;
}

/// Analytic Jacobian of nls_residuals, shape (2 * n_paths) x (2 + n_paths).
inline Eigen::MatrixXd nls_jacobian(const NlsProblem& p, const Eigen::VectorXd& params) {
  const auto n = static_cast<Eigen::Index>(p.n_paths());
  if (params.size() != 2 + n) throw std::invalid_argument("nls_jacobian: bad parameter size");
  const Point2 ue{params(0), params(1)};
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(2 * n, 2 + n);
  for (Eigen::Index l = 0; l < n; ++l) {
    const double d = params(2 + l);
    const Point2 u = unit_vector(p.aoa[l]);
    const Point2 s = p.bs + d * u;
    const double sw = std::sqrt(p.weight[l]);

    const Point2 e = ue - s;
    const double rho = norm(e);
    if (rho > 1e-12) {
      jac(2 * l, 0) = sw * e.x / rho;
      jac(2 * l, 1) = sw * e.y / rho;
      jac(2 * l, 2 + l) = sw * (1.0 - dot(u, e) / rho);
    } else {
      jac(2 * l, 2 + l) = sw; // transmitter on the scatterer: range term only
    }

    const Point2 g = s - p.prior[l];
    const double gamma = norm(g);
    if (gamma > 1e-12)
      jac(2 * l + 1, 2 + l) = std::sqrt(p.lambda_prior) * sw * dot(u, g) / gamma;
  }
  return jac;
}

struct LmOptions {
  int max_iterations = 200;
  double step_tol = 1e-10;          // stop when an accepted step is shorter
  double objective_rel_tol = 1e-12; // stop on relative objective decrease below this
  double mu0_scale = 1e-3;          // initial damping = mu0_scale * max diag(J^T J)
  std::vector<double> lower_bounds; // optional per-parameter clamp, empty = none
};

struct LmResult {
  Eigen::VectorXd params;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Damped Gauss-Newton minimization of |f(x)|^2. Accepted steps strictly
/// decrease the objective; trial points are clamped to the lower bounds
/// before evaluation so every accepted iterate is feasible. Damping is
/// multiplied/divided by 10 on reject/accept.
inline LmResult levenberg_marquardt(const Eigen::VectorXd& init,
                                    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residual_fn,
                                    const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& jacobian_fn,
                                    const LmOptions& opts = {}) {
  const auto clamp = [&opts](Eigen::VectorXd v) {
    if (!opts.lower_bounds.empty()) {
      if (static_cast<Eigen::Index>(opts.lower_bounds.size()) != v.size())
        throw std::invalid_argument("levenberg_marquardt: lower_bounds size mismatch");
      for (Eigen::Index i = 0; i < v.size(); ++i)
        v(i) = std::max(v(i), opts.lower_bounds[i]);
    }
    return v;
  };

  LmResult out;
  out.params = clamp(init);
  Eigen::VectorXd r = residual_fn(out.params);
  if (!r.allFinite())
    throw std::invalid_argument("levenberg_marquardt: non-finite residuals at init");
  out.objective = r.squaredNorm();
  if (out.objective == 0.0) {
    out.converged = true;
    return out;
  }

  Eigen::MatrixXd j = jacobian_fn(out.params);
  if (j.rows() != r.size())
    throw std::invalid_argument("levenberg_marquardt: jacobian/residual shape mismatch");
  Eigen::MatrixXd jtj = j.transpose() * j;
  Eigen::VectorXd g = j.transpose() * r;
  double mu = opts.mu0_scale * jtj.diagonal().maxCoeff();
  if (!(mu > 0.0)) mu = 1e-8;

  for (int iter = 1; iter <= opts.max_iterations; ++iter) {
    Eigen::MatrixXd damped = jtj;
    damped.diagonal().array() += mu;
    const Eigen::VectorXd step = damped.ldlt().solve(-g);
    const Eigen::VectorXd trial = clamp(out.params + step);
    const Eigen::VectorXd rt = step.allFinite() ? residual_fn(trial) : Eigen::VectorXd();
    const double st = (rt.size() == r.size() && rt.allFinite())
                          ? rt.squaredNorm()
                          : std::numeric_limits<double>::infinity();

    if (st < out.objective) {
      const double taken = (trial - out.params).norm();
      const double decrease = out.objective - st;
      out.params = trial;
      out.objective = st;
      out.iterations = iter;
      r = rt;
      j = jacobian_fn(out.params);
      jtj.noalias() = j.transpose() * j;
      g.noalias() = j.transpose() * r;
      mu = std::max(mu / 10.0, 1e-18);
      if (taken < opts.step_tol || st == 0.0 ||
          decrease < opts.objective_rel_tol * std::max(st, 1e-300)) {
        out.converged = true;
        return out;
      }
    } else {
      mu *= 10.0;
      if (mu > 1e16) {
        // No step improves the objective at any damping: converged if the
        // gradient is already at numeric noise, stalled otherwise.
        out.converged = g.lpNorm<Eigen::Infinity>() <= 1e-6 * (1.0 + out.objective);
        return out;
      }
    }
  }
  return out;
}

struct LocalizeOptions {
  int k_cand = 10;
  double lambda_prior = 2.0;
  DissimilarityScales scales{};
  LmOptions lm{};
  const RankingEngine* engine = nullptr; // optional cached ranking backend
};

struct LocalizationResult {
  Point2 ue_estimate;
  std::vector<Point2> scatterer_estimates; // on their measured-angle rays
  Point2 coarse_estimate;                  // similarity-weighted barycenter
  CandidateSet candidates;
  std::vector<ScattererPrior> priors;      // surviving matches (w >= 0.5)
  double final_objective = 0.0;
  int iterations = 0;
  bool converged = false;
  bool fallback_used = false; // no prior survived; coarse fix returned
};

/// Full pipeline on a precomputed candidate set.
inline LocalizationResult localize_with_candidates(const ObservationSet& obs,
                                                   const CandidateSet& candidates,
                                                   const Ckm& map, const DictConfig& dict,
                                                   const LocalizeOptions& opts = {}) {
  LocalizationResult res;
  res.candidates = candidates;
  res.coarse_estimate = barycenter(candidates);
  res.priors = select_priors(obs, candidates, map, dict, opts.scales);

  if (res.priors.empty()) {
    res.ue_estimate = res.coarse_estimate;
    res.fallback_used = true;
    res.converged = true;
    return res;
  }

  NlsProblem problem;
  problem.bs = map.bs;
  problem.lambda_prior = opts.lambda_prior;
  for (const ScattererPrior& prior : res.priors) {
    const PathParam& path = obs[static_cast<std::size_t>(prior.obs_path_index)];
    problem.aoa.push_back(path.aoa);
    problem.toa.push_back(path.toa);
    problem.weight.push_back(prior.weight);
    problem.prior.push_back(prior.location);
  }
  problem.validate();

  const auto n = static_cast<Eigen::Index>(problem.n_paths());
  Eigen::VectorXd init(2 + n);
  init(0) = res.coarse_estimate.x;
  init(1) = res.coarse_estimate.y;
  for (Eigen::Index l = 0; l < n; ++l) {
    // Scatterer starts at the ray point nearest its prior.
    const Point2 u = unit_vector(problem.aoa[l]);
    init(2 + l) = std::max(0.0, dot(u, problem.prior[l] - problem.bs));
  }

  LmOptions lm = opts.lm;
  lm.lower_bounds.assign(static_cast<std::size_t>(2 + n), -std::numeric_limits<double>::infinity());
  for (Eigen::Index l = 0; l < n; ++l) lm.lower_bounds[static_cast<std::size_t>(2 + l)] = 0.0;

  const LmResult fit = levenberg_marquardt(
      init, [&](const Eigen::VectorXd& x) { return nls_residuals(problem, x); },
      [&](const Eigen::VectorXd& x) { return nls_jacobian(problem, x); }, lm);

  res.ue_estimate = {fit.params(0), fit.params(1)};
  for (Eigen::Index l = 0; l < n; ++l)
    res.scatterer_estimates.push_back(problem.bs + fit.params(2 + l) * unit_vector(problem.aoa[l]));
  res.final_objective = fit.objective;
  res.iterations = fit.iterations;
  res.converged = fit.converged;
  return res;
}

/// Coarse ranking, prior selection, and the joint weighted NLS refinement
/// in one call. If every match is discarded the coarse barycenter is
/// returned with fallback_used set.
inline LocalizationResult localize(const ObservationSet& obs, const Ckm& map,
                                   const DictConfig& dict, const LocalizeOptions& opts = {}) {
  if (opts.engine && !(opts.engine->dict() == dict))
    throw std::invalid_argument("localize: ranking engine was built on a different grid");
  const CandidateSet candidates = opts.engine ? opts.engine->rank(obs, opts.k_cand)
                                              : rank_candidates(obs, map, dict, opts.k_cand);
  return localize_with_candidates(obs, candidates, map, dict, opts);
}

} // namespace ckmloc
