// Frequency-domain SIMO multipath channel: synthesis, noise, and path
// extraction.
//
// The channel is simulated directly per subcarrier (equivalent to ideal
// CP-OFDM after demodulation): entry (m, n) of the M x N matrix carries
// the phase of antenna m and subcarrier n for each path, weighted by the
// path gain. Extraction runs CLEAN-style successive cancellation on the
// angle-delay power map: take the strongest bin, refine it off-grid with
// a 3-point parabola per axis, subtract the fitted rank-one component,
// repeat until the residual peak drops below a relative threshold.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "ckmloc/geometry.hpp"
#include "ckmloc/rng.hpp"
#include "ckmloc/spectrum.hpp"

namespace ckmloc {

using ChannelMatrix = Eigen::MatrixXcd;

/// Observed resolvable paths, sorted by descending estimated power.
using ObservationSet = std::vector<PathParam>;

/// Front-end and array parameters.
struct RfConfig {
  double carrier_hz = 6e9;
  double bandwidth_hz = 100e6;
  int n_subcarriers = 1024;
  int n_antennas = 32;
  double antenna_spacing_wavelengths = 0.5;
  double snr_db = 30.0;

  double subcarrier_spacing_hz() const { return bandwidth_hz / n_subcarriers; }
  /// Largest unambiguous delay of the subcarrier grid.
  double max_unambiguous_delay_s() const { return 1.0 / subcarrier_spacing_hz(); }

  void validate() const {
    if (n_subcarriers < 1 || n_antennas < 1)
      throw std::invalid_argument("RfConfig: counts must be >= 1");
    if (!(bandwidth_hz > 0.0) || !(carrier_hz > 0.0))
      throw std::invalid_argument("RfConfig: frequencies must be positive");
    if (!(antenna_spacing_wavelengths > 0.0))
      throw std::invalid_argument("RfConfig: antenna spacing must be positive");
  }
};

/// Projection grid matching an RF front end.
inline DictConfig make_dict(const RfConfig& rf, int n_theta, int n_tau) {
  DictConfig d;
  d.n_theta = n_theta;
  d.n_tau = n_tau;
  d.n_antennas = rf.n_antennas;
  d.n_subcarriers = rf.n_subcarriers;
  d.antenna_spacing_wavelengths = rf.antenna_spacing_wavelengths;
  d.subcarrier_spacing_hz = rf.subcarrier_spacing_hz();
  d.validate();
  return d;
}

namespace detail {

inline Eigen::VectorXcd steering_vector(double aoa, int m, double spacing_wl) {
  Eigen::VectorXcd v(m);
  const double s = spacing_wl * std::sin(aoa);
  for (int i = 0; i < m; ++i) v(i) = std::polar(1.0, -2.0 * kPi * i * s);
  return v;
}

inline Eigen::RowVectorXcd delay_row(double toa, int n, double df) {
  Eigen::RowVectorXcd v(n);
  for (int i = 0; i < n; ++i) v(i) = std::polar(1.0, -2.0 * kPi * i * df * toa);
  return v;
}

// Offset of the parabola vertex through (-1, ym), (0, y0), (+1, yp),
// clamped to half a bin.
inline double parabolic_offset(double ym, double y0, double yp) {
  const double denom = ym - 2.0 * y0 + yp;
  if (std::abs(denom) < 1e-300) return 0.0;
  return std::clamp(0.5 * (ym - yp) / denom, -0.5, 0.5);
}

// Golden-section maximization of a unimodal objective on [lo, hi].
template <typename Fn>
double golden_max(Fn&& f, double lo, double hi, int iters = 24) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - kInvPhi * (b - a), x2 = a + kInvPhi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < iters; ++i) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = f(x1);
    }
  }
  return 0.5 * (a + b);
}

// Alternating 1-D matched-filter refinement of one path against a
// residual matrix. Each axis pass caches the projection onto the other
// axis' steering vector, so single-axis evaluations cost O(M) or O(N).
inline void refine_path(const Eigen::MatrixXcd& x, const DictConfig& d, double& sin_theta,
                        double& tau, int rounds = 2) {
  const int m = d.n_antennas;
  const int n = d.n_subcarriers;
  const double half_sin = 0.6 / (d.n_theta * d.antenna_spacing_wavelengths);
  const double half_tau = 0.6 / (d.n_tau * d.subcarrier_spacing_hz);
  Eigen::VectorXcd steer(m), delay(n);
  const auto fill_steer = [&](double s) {
    for (int i = 0; i < m; ++i)
      steer(i) = std::polar(1.0, -2.0 * kPi * i * d.antenna_spacing_wavelengths * s);
  };
  const auto fill_delay = [&](double t) {
    for (int i = 0; i < n; ++i)
      delay(i) = std::polar(1.0, -2.0 * kPi * i * d.subcarrier_spacing_hz * t);
  };
  for (int round = 0; round < rounds; ++round) {
    fill_delay(tau);
    const Eigen::VectorXcd right = x * delay.conjugate(); // M
    sin_theta = golden_max(
        [&](double s) {
          fill_steer(s);
          return std::abs(steer.dot(right)); // conjugates steer
        },
        std::max(-1.0, sin_theta - half_sin), std::min(1.0, sin_theta + half_sin));
    fill_steer(sin_theta);
    const Eigen::RowVectorXcd left = steer.adjoint() * x; // N
    tau = golden_max(
        [&](double t) {
          fill_delay(t);
          return std::abs((left * delay.conjugate())(0));
        },
        std::max(0.0, tau - half_tau), tau + half_tau);
  }
}

} // namespace detail

/// Noise-free channel matrix H = sum_l gain_l * steer(aoa_l) * delay(toa_l).
/// Paths without a stored gain contribute with unit gain.
inline ChannelMatrix synth_channel(const std::vector<PathParam>& paths, const RfConfig& cfg) {
  cfg.validate();
  if (paths.empty()) throw std::invalid_argument("synth_channel: empty path list");
  const double df = cfg.subcarrier_spacing_hz();
  ChannelMatrix h = ChannelMatrix::Zero(cfg.n_antennas, cfg.n_subcarriers);
  for (const PathParam& p : paths) {
    if (!(p.toa < cfg.max_unambiguous_delay_s()))
      throw std::invalid_argument("synth_channel: delay exceeds unambiguous range (aliased)");
    const std::complex<double> gain = p.gain.value_or(std::complex<double>(1.0, 0.0));
    h.noalias() += gain * detail::steering_vector(p.aoa, cfg.n_antennas, cfg.antenna_spacing_wavelengths) *
                   detail::delay_row(p.toa, cfg.n_subcarriers, df);
  }
  return h;
}

/// Adds circularly-symmetric complex white noise at the requested SNR.
/// SNR is defined against the mean signal power per matrix entry. An
/// infinite snr_db is the noiseless flag and returns h unchanged.
/// Deterministic: the seed fully determines the noise realization.
inline ChannelMatrix add_awgn(const ChannelMatrix& h, double snr_db, std::uint64_t seed) {
  if (std::isinf(snr_db) && snr_db > 0.0) return h;
  const double mean_power = h.squaredNorm() / static_cast<double>(h.size());
  const double sigma = std::sqrt(mean_power / std::pow(10.0, snr_db / 10.0));
  Rng rng(seed);
  ChannelMatrix out = h;
  for (Eigen::Index m = 0; m < out.rows(); ++m)
    for (Eigen::Index n = 0; n < out.cols(); ++n) out(m, n) += sigma * rng.cgaussian();
  return out;
}

/// Extracts up to max_paths (aoa, toa, gain) triples from a channel
/// matrix by successive cancellation on the projection grid. Stops when
/// the residual map peak falls below peak_threshold_rel times the first
/// peak. Throws if the matrix has no positive-power peak at all.
inline ObservationSet estimate_paths(const ChannelMatrix& h, const DictConfig& dict,
                                     int max_paths = 24, double peak_threshold_rel = 0.05) {
  dict.validate();
  if (h.rows() != dict.n_antennas || h.cols() != dict.n_subcarriers)
    throw std::invalid_argument("estimate_paths: matrix does not match DictConfig");
  if (max_paths < 1) throw std::invalid_argument("estimate_paths: max_paths must be >= 1");

  const int nt = dict.n_theta;
  const int nd = dict.n_tau;
  const double df = dict.subcarrier_spacing_hz;
  const double mn = static_cast<double>(dict.n_antennas) * dict.n_subcarriers;

  ChannelMatrix residual = h;
  Eigen::MatrixXcd b = detail::project_to_grid(residual, dict);
  Eigen::MatrixXd power = b.cwiseAbs2();

  double first_peak = 0.0;
  ObservationSet paths;
  for (int iter = 0; iter < max_paths; ++iter) {
    Eigen::Index pi = 0, pn = 0;
    const double peak = power.maxCoeff(&pi, &pn);
    if (iter == 0) {
      if (!(peak > 0.0)) throw std::runtime_error("estimate_paths: no resolvable path");
      first_peak = peak;
    } else if (peak < peak_threshold_rel * first_peak) {
      break;
    }

    // Coarse off-grid shift from a 3-point parabola per axis (periodic
    // neighbors), then matched-filter refinement against the residual.
    const auto wrap = [](Eigen::Index i, int n) { return (i % n + n) % n; };
    const double d_theta = detail::parabolic_offset(power(wrap(pi - 1, nt), pn), peak,
                                                    power(wrap(pi + 1, nt), pn));
    const double d_tau = detail::parabolic_offset(power(pi, wrap(pn - 1, nd)), peak,
                                                  power(pi, wrap(pn + 1, nd)));
    const double kappa = static_cast<double>(pi) - nt / 2 + d_theta;
    double sin_theta = std::clamp(kappa / (nt * dict.antenna_spacing_wavelengths), -1.0, 1.0);
    double bin_tau = static_cast<double>(pn) + d_tau;
    if (bin_tau < 0.0) bin_tau += nd;
    double tau = bin_tau / (nd * df);
    detail::refine_path(residual, dict, sin_theta, tau);

    PathParam p;
    p.aoa = std::asin(sin_theta);
    p.toa = tau;

    // Matched-filter gain on the residual, then exact rank-one removal in
    // both the channel and the projected domain.
    const Eigen::VectorXcd steer =
        detail::steering_vector(p.aoa, dict.n_antennas, dict.antenna_spacing_wavelengths);
    const Eigen::RowVectorXcd delay = detail::delay_row(p.toa, dict.n_subcarriers, df);
    const std::complex<double> alpha =
        (steer.adjoint() * residual * delay.adjoint())(0, 0) / mn;
    p.gain = alpha;
    paths.push_back(p);

    residual.noalias() -= alpha * steer * delay;
    const std::vector<PathParam> just{p};
    b.noalias() -= alpha * detail::angle_profiles(just, dict) *
                   detail::delay_profiles(just, dict).transpose();
    power = b.cwiseAbs2();
  }

  // Polish pass: re-estimate each path against the residual with its own
  // component restored.
  for (PathParam& p : paths) {
    Eigen::VectorXcd steer =
        detail::steering_vector(p.aoa, dict.n_antennas, dict.antenna_spacing_wavelengths);
    Eigen::RowVectorXcd delay = detail::delay_row(p.toa, dict.n_subcarriers, df);
    residual.noalias() += *p.gain * steer * delay;
    double sin_theta = std::sin(p.aoa);
    double tau = p.toa;
    detail::refine_path(residual, dict, sin_theta, tau);
    p.aoa = std::asin(sin_theta);
    p.toa = tau;
    steer = detail::steering_vector(p.aoa, dict.n_antennas, dict.antenna_spacing_wavelengths);
    delay = detail::delay_row(p.toa, dict.n_subcarriers, df);
    p.gain = (steer.adjoint() * residual * delay.adjoint())(0, 0) / mn;
    residual.noalias() -= *p.gain * steer * delay;
  }

  std::stable_sort(paths.begin(), paths.end(), [](const PathParam& a, const PathParam& b2) {
    return std::norm(a.gain.value_or(0.0)) > std::norm(b2.gain.value_or(0.0));
  });
  return paths;
}

/// Front-end bypass: true path parameters perturbed by zero-mean Gaussian
/// errors, sorted by descending true power and capped at max_paths. Used
/// to study the pipeline in isolation from extraction quality.
inline ObservationSet oracle_observation(const std::vector<PathParam>& true_paths,
                                         double sigma_theta_rad, double sigma_tau_s,
                                         std::uint64_t seed, int max_paths = 24) {
  if (true_paths.empty()) throw std::invalid_argument("oracle_observation: empty path list");
  Rng rng(seed);
  ObservationSet obs = true_paths;
  for (PathParam& p : obs) {
    p.aoa = wrap_angle(p.aoa + sigma_theta_rad * rng.gaussian());
    p.toa = std::max(1e-15, p.toa + sigma_tau_s * rng.gaussian());
  }
  std::stable_sort(obs.begin(), obs.end(), [](const PathParam& a, const PathParam& b) {
    return std::norm(a.gain.value_or(1.0)) > std::norm(b.gain.value_or(1.0));
  });
  if (static_cast<int>(obs.size()) > max_paths) obs.resize(max_paths);
  return obs;
}

} // namespace ckmloc
