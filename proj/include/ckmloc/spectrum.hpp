// Angle-delay spectra.
//
// A set of (aoa, toa) paths seen by an M-element half-wavelength ULA over
// N subcarriers is rendered onto a common N_theta x N_tau grid by a
// two-sided DFT projection:
//
//   B = W^H X V,   P = |B|^2  (elementwise)
//
// where X is either a measured channel matrix or a unit-gain "virtual
// snapshot" rebuilt from a stored path list, W is the spatial DFT
// dictionary and V the delay DFT dictionary. Because every column of X
// is a sampled complex exponential, B also has a closed form as a sum of
// separable Dirichlet kernels; both routes are provided and must agree,
// which the tests exploit. Power maps on the common grid are compared by
// cosine similarity after peak normalization.
//
// Conventions (fixed here, used everywhere else in the library):
//   - snapshot entry      X[m, n]  = sum_l exp(-j*2*pi*(d/lambda)*m*sin(aoa_l))
//                                         * exp(-j*2*pi*n*df*toa_l)
//   - spatial dictionary  W[m, k]  = exp(-j*2*pi*m*k/N_theta) / sqrt(M)
//   - delay dictionary    V[n', n] = exp(+j*2*pi*n'*n/N_tau)  / sqrt(N)
//   - angle rows are two-sided: row i covers k = i - N_theta/2, so the
//     grid spans sin(theta) in [-1, 1) at half-wavelength spacing
//   - delay columns are one-sided: column n covers tau = n / (N_tau*df)
#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "ckmloc/geometry.hpp"

namespace ckmloc {

/// Grid geometry for the two-sided angle / one-sided delay projection.
struct DictConfig {
  int n_theta = 256; ///< angular DFT size (even, >= n_antennas)
  int n_tau = 1024;  ///< delay DFT size (>= n_subcarriers)
  int n_antennas = 32;
  int n_subcarriers = 1024;
  double antenna_spacing_wavelengths = 0.5;
  double subcarrier_spacing_hz = 100e6 / 1024;

  void validate() const {
    if (n_antennas < 1 || n_subcarriers < 1)
      throw std::invalid_argument("DictConfig: array/subcarrier counts must be >= 1");
    if (n_theta < n_antennas || n_tau < n_subcarriers)
      throw std::invalid_argument("DictConfig: grids must be at least critically sampled");
    if (n_theta % 2 != 0)
      throw std::invalid_argument("DictConfig: n_theta must be even (two-sided grid)");
    if (!(subcarrier_spacing_hz > 0.0))
      throw std::invalid_argument("DictConfig: subcarrier spacing must be positive");
    if (!(antenna_spacing_wavelengths > 0.0))
      throw std::invalid_argument("DictConfig: antenna spacing must be positive");
  }

  friend bool operator==(const DictConfig&, const DictConfig&) = default;

  /// Continuous angle-axis coordinate of a physical angle, in bins.
  double angle_bin_coord(double aoa) const {
    return n_theta * antenna_spacing_wavelengths * std::sin(aoa);
  }
  /// Continuous delay-axis coordinate of a physical delay, in bins.
  double delay_bin_coord(double toa) const {
    return n_tau * subcarrier_spacing_hz * toa;
  }
};

/// Nonnegative power map over the angle-delay grid.
struct AngleDelayMap {
  Eigen::MatrixXd values; // n_theta x n_tau, entries >= 0
  bool peak_normalized = false;
};

namespace detail {

// Dirichlet factor sum_{m=0}^{K-1} exp(-j*m*x) = exp(-j*(K-1)*x/2) *
// sin(K*x/2) / sin(x/2). At multiples of 2*pi both factors degenerate and
// the sum is K exactly; the series limit is used below that threshold.
inline std::complex<double> dirichlet_factor(int k, double x) {
  const double half_sin = std::sin(0.5 * x);
  if (std::abs(half_sin) < 1e-12) return {static_cast<double>(k), 0.0};
  const double ratio = std::sin(0.5 * k * x) / half_sin;
  const double phase = -0.5 * (k - 1) * x;
  return std::polar(ratio, phase);
}

// Column l is the angle-axis response (1/sqrt(M)) * E_M(phi_l(k)) of path l.
inline Eigen::MatrixXcd angle_profiles(const std::vector<PathParam>& paths,
                                       const DictConfig& cfg) {
  const int m = cfg.n_antennas;
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  Eigen::MatrixXcd out(cfg.n_theta, static_cast<Eigen::Index>(paths.size()));
  for (Eigen::Index l = 0; l < out.cols(); ++l) {
    const double s = cfg.antenna_spacing_wavelengths * std::sin(paths[l].aoa);
    for (int i = 0; i < cfg.n_theta; ++i) {
      const double kappa = i - cfg.n_theta / 2;
      const double phi = 2.0 * kPi * (s - kappa / cfg.n_theta);
      out(i, l) = scale * dirichlet_factor(m, phi);
    }
  }
  return out;
}

// Column l is the delay-axis response (1/sqrt(N)) * E_N(psi_l(n)) of path l.
inline Eigen::MatrixXcd delay_profiles(const std::vector<PathParam>& paths,
                                       const DictConfig& cfg) {
  const int n_sub = cfg.n_subcarriers;
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_sub));
  Eigen::MatrixXcd out(cfg.n_tau, static_cast<Eigen::Index>(paths.size()));
  for (Eigen::Index l = 0; l < out.cols(); ++l) {
    const double dftau = cfg.subcarrier_spacing_hz * paths[l].toa;
    for (int n = 0; n < cfg.n_tau; ++n) {
      const double psi = 2.0 * kPi * (dftau - static_cast<double>(n) / cfg.n_tau);
      out(n, l) = scale * dirichlet_factor(n_sub, psi);
    }
  }
  return out;
}

// Spatial dictionary, already conjugate-transposed: (N_theta x M).
inline Eigen::MatrixXcd spatial_dictionary_adjoint(const DictConfig& cfg) {
  Eigen::MatrixXcd wh(cfg.n_theta, cfg.n_antennas);
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.n_antennas));
  for (int i = 0; i < cfg.n_theta; ++i) {
    const double kappa = i - cfg.n_theta / 2;
    for (int m = 0; m < cfg.n_antennas; ++m)
      wh(i, m) = std::polar(scale, 2.0 * kPi * m * kappa / cfg.n_theta);
  }
  return wh;
}

// Delay dictionary (N x N_tau).
inline Eigen::MatrixXcd delay_dictionary(const DictConfig& cfg) {
  Eigen::MatrixXcd v(cfg.n_subcarriers, cfg.n_tau);
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.n_subcarriers));
  for (int np = 0; np < cfg.n_subcarriers; ++np)
    for (int n = 0; n < cfg.n_tau; ++n)
      v(np, n) = std::polar(scale, 2.0 * kPi * static_cast<double>(np) * n / cfg.n_tau);
  return v;
}

// Fast two-sided projection B = W^H X V: dense product on the (short)
// spatial axis, zero-padded FFT on the delay axis. Equals the literal
// dictionary product to rounding; the tests pin that equivalence.
inline Eigen::MatrixXcd project_to_grid(const Eigen::MatrixXcd& x, const DictConfig& cfg) {
  if (x.rows() != cfg.n_antennas || x.cols() != cfg.n_subcarriers)
    throw std::invalid_argument("project_to_grid: matrix does not match DictConfig");
  const Eigen::MatrixXcd stage = spatial_dictionary_adjoint(cfg) * x;
  Eigen::MatrixXcd b(cfg.n_theta, cfg.n_tau);
  Eigen::FFT<double> fft;
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.n_subcarriers));
  std::vector<std::complex<double>> in(static_cast<std::size_t>(cfg.n_tau));
  std::vector<std::complex<double>> out(static_cast<std::size_t>(cfg.n_tau));
  for (int i = 0; i < cfg.n_theta; ++i) {
    // Unscaled inverse DFT via conj(fft(conj(x))), padded to n_tau.
    for (int n = 0; n < cfg.n_subcarriers; ++n) in[n] = std::conj(stage(i, n));
    for (int n = cfg.n_subcarriers; n < cfg.n_tau; ++n) in[n] = 0.0;
    fft.fwd(out, in);
    for (int n = 0; n < cfg.n_tau; ++n) b(i, n) = scale * std::conj(out[n]);
  }
  return b;
}

} // namespace detail

/// Unit-gain virtual snapshot of a path list (gains deliberately not
/// applied, so stored signatures and observations project identically
/// regardless of received power).
inline Eigen::MatrixXcd snapshot(const std::vector<PathParam>& paths, const DictConfig& cfg) {
  cfg.validate();
  if (paths.empty()) throw std::invalid_argument("snapshot: empty path list");
  Eigen::MatrixXcd x = Eigen::MatrixXcd::Zero(cfg.n_antennas, cfg.n_subcarriers);
  for (const PathParam& p : paths) {
    Eigen::VectorXcd steer(cfg.n_antennas);
    for (int m = 0; m < cfg.n_antennas; ++m)
      steer(m) = std::polar(1.0, -2.0 * kPi * cfg.antenna_spacing_wavelengths * m * std::sin(p.aoa));
    Eigen::RowVectorXcd delay(cfg.n_subcarriers);
    for (int n = 0; n < cfg.n_subcarriers; ++n)
      delay(n) = std::polar(1.0, -2.0 * kPi * n * cfg.subcarrier_spacing_hz * p.toa);
    x.noalias() += steer * delay;
  }
  return x;
}

/// Literal two-sided dictionary projection of an arbitrary M x N matrix,
/// then elementwise squared magnitude. Reference route; the closed form
/// below must match it and the fast FFT projection is checked against it.
inline AngleDelayMap power_map(const Eigen::MatrixXcd& x, const DictConfig& cfg) {
  cfg.validate();
  if (x.rows() != cfg.n_antennas || x.cols() != cfg.n_subcarriers)
    throw std::invalid_argument("power_map: matrix does not match DictConfig");
  const Eigen::MatrixXcd b =
      detail::spatial_dictionary_adjoint(cfg) * x * detail::delay_dictionary(cfg);
  AngleDelayMap map;
  map.values = b.cwiseAbs2();
  return map;
}

/// Closed-form power map of a path list: each path contributes a
/// separable product of two Dirichlet kernels; the complex spectrum is
/// their coherent sum. Equal to power_map(snapshot(paths)) but O(L) per
/// grid bin instead of a dense projection.
inline AngleDelayMap dirichlet_map(const std::vector<PathParam>& paths, const DictConfig& cfg) {
  cfg.validate();
  if (paths.empty()) throw std::invalid_argument("dirichlet_map: empty path list");
  const Eigen::MatrixXcd a = detail::angle_profiles(paths, cfg);
  const Eigen::MatrixXcd d = detail::delay_profiles(paths, cfg);
  Eigen::MatrixXcd b(cfg.n_theta, cfg.n_tau);
  b.noalias() = a * d.transpose();
  AngleDelayMap map;
  map.values = b.cwiseAbs2();
  return map;
}

/// Scales a map so its largest entry is exactly 1.
inline AngleDelayMap peak_normalize(const AngleDelayMap& map) {
  const double peak = map.values.maxCoeff();
  if (!(peak > 0.0)) throw std::invalid_argument("peak_normalize: map has no positive entry");
  AngleDelayMap out;
  out.values = map.values / peak;
  out.peak_normalized = true;
  return out;
}

/// Cosine similarity between two peak-normalized maps of equal shape.
/// Lies in [0, 1] because entries are nonnegative; 1 iff the maps are
/// positively proportional.
inline double cosine_similarity(const AngleDelayMap& a, const AngleDelayMap& b) {
  if (a.values.rows() != b.values.rows() || a.values.cols() != b.values.cols())
    throw std::invalid_argument("cosine_similarity: shape mismatch");
  if (!a.peak_normalized || !b.peak_normalized)
    throw std::invalid_argument("cosine_similarity: maps must be peak-normalized");
  const double na = a.values.norm();
  const double nb = b.values.norm();
  if (!(na > 0.0) || !(nb > 0.0))
    throw std::invalid_argument("cosine_similarity: zero-norm operand");
  const double sim = (a.values.array() * b.values.array()).sum() / (na * nb);
  return std::min(1.0, std::max(0.0, sim));
}

} // namespace ckmloc
