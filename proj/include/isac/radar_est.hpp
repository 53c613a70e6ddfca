#pragma once

// Radar parameter estimation from the echo cube: element-wise division by the
// transmitted symbols, a 2D DFT range-Doppler map, peak picking, MUSIC
// direction finding and reflection-coefficient back-calculation.
//
// Axis convention: the delay index lives on the subcarrier (fast-time) axis
// and the Doppler index on the symbol (slow-time) axis.

#include "isac/array.hpp"
#include "isac/channel.hpp"
#include "isac/common.hpp"
#include "isac/fft.hpp"
#include "isac/waveform.hpp"

#include <algorithm>
#include <optional>
#include <vector>

namespace isac {

using DividedGrid = CMat;

/// R~_i(m,l) = r_i(m,l) / s(m,l) for every antenna i.
inline std::vector<DividedGrid> matched_division(const EchoCube& echo, const ResourceGrid& grid) {
  std::vector<DividedGrid> out;
  out.reserve(echo.antennas());
  if ((grid.symbols.array() == cd{0.0, 0.0}).any())
    throw EstimationError("matched_division: grid contains zero symbols");
  for (const auto& a : echo.data) {
    if (a.rows() != grid.symbols.rows() || a.cols() != grid.symbols.cols())
      throw DimensionError("matched_division: echo and grid sizes differ");
    out.push_back(a.cwiseQuotient(grid.symbols));
  }
  return out;
}

struct RadarAxes {
  double scs = 120e3;
  double symbol_duration = 8.929e-6;
  double carrier_hz = 35e9;

  static RadarAxes from(const Numerology& n, double carrier_hz) { return {n.scs, n.symbol_duration, carrier_hz}; }
};

/// Complex range-Doppler image: unscaled inverse DFT over subcarriers (length
/// M * pad_m), forward DFT over symbols (length L * pad_l), divided by M * L so
/// an on-grid target of amplitude alpha peaks at exactly alpha.
inline CMat range_doppler_transform(const DividedGrid& div, int pad_m, int pad_l) {
  if (pad_m < 1 || pad_l < 1) throw ConfigError("range_doppler: pad factors must be >= 1");
  const Eigen::Index m = div.rows();
  const Eigen::Index l = div.cols();
  const Eigen::Index mp = m * pad_m;
  const Eigen::Index lp = l * pad_l;

  CMat rd = CMat::Zero(mp, lp);
  rd.topLeftCorner(m, l) = div;
  fft::columns(rd, fft::Direction::Inverse, l);
  fft::rows(rd, fft::Direction::Forward);
  rd *= 1.0 / static_cast<double>(m * l);
  return rd;
}

struct RangeDopplerMap {
  RMat magnitudes;               // (M * pad_m) x (L * pad_l)
  double range_bin_m = 0.0;      // c / (2 M' df)
  double velocity_bin_mps = 0.0; // c / (2 fc L' Ts)

  Eigen::Index delay_bins() const { return magnitudes.rows(); }
  Eigen::Index doppler_bins() const { return magnitudes.cols(); }
};

inline RangeDopplerMap make_map(RMat magnitudes, const RadarAxes& axes) {
  RangeDopplerMap map;
  map.range_bin_m = kSpeedOfLight / (2.0 * static_cast<double>(magnitudes.rows()) * axes.scs);
  map.velocity_bin_mps =
      kSpeedOfLight / (2.0 * axes.carrier_hz * static_cast<double>(magnitudes.cols()) * axes.symbol_duration);
  map.magnitudes = std::move(magnitudes);
  return map;
}

inline RangeDopplerMap range_doppler_map(const DividedGrid& div, int pad_m, int pad_l, const RadarAxes& axes) {
  return make_map(range_doppler_transform(div, pad_m, pad_l).cwiseAbs2().cwiseSqrt(), axes);
}

/// Non-coherent combination: magnitudes averaged over antennas.
inline RangeDopplerMap combine_maps(const std::vector<CMat>& per_antenna, const RadarAxes& axes) {
  if (per_antenna.empty()) throw DimensionError("combine_maps: no antennas");
  RMat acc = RMat::Zero(per_antenna.front().rows(), per_antenna.front().cols());
  for (const auto& rd : per_antenna) acc += rd.cwiseAbs2().cwiseSqrt();
  acc /= static_cast<double>(per_antenna.size());
  return make_map(std::move(acc), axes);
}

struct Peak {
  Eigen::Index delay_bin = 0;
  Eigen::Index doppler_bin = 0;
  double magnitude = 0.0;
};

/// The k largest local maxima (8-neighbourhood, circular in both axes). Once a
/// peak is accepted, every candidate within `guard` bins of it on both axes is
/// discarded. Ties resolve towards the lower (delay, doppler) index.
inline std::vector<Peak> detect_peaks(const RangeDopplerMap& map, int k, int guard = 1) {
  if (k < 1) throw ConfigError("detect_peaks: k must be >= 1");
  const auto& a = map.magnitudes;
  const Eigen::Index rows = a.rows();
  const Eigen::Index cols = a.cols();
  auto wrap = [](Eigen::Index i, Eigen::Index n) { return ((i % n) + n) % n; };

  std::vector<Peak> cand;
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double v = a(i, j);
      bool is_max = true;
      for (int di = -1; di <= 1 && is_max; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
          if (di == 0 && dj == 0) continue;
          if (a(wrap(i + di, rows), wrap(j + dj, cols)) > v) {
            is_max = false;
            break;
          }
        }
      if (is_max) cand.push_back({i, j, v});
    }
  std::stable_sort(cand.begin(), cand.end(), [](const Peak& x, const Peak& y) {
    if (x.magnitude != y.magnitude) return x.magnitude > y.magnitude;
    return x.delay_bin != y.delay_bin ? x.delay_bin < y.delay_bin : x.doppler_bin < y.doppler_bin;
  });

  auto circ = [](Eigen::Index a0, Eigen::Index b0, Eigen::Index n) {
    const Eigen::Index d = std::abs(a0 - b0) % n;
    return std::min(d, n - d);
  };
  std::vector<Peak> out;
  for (const auto& c : cand) {
    if (static_cast<int>(out.size()) == k) break;
    const bool blocked = std::any_of(out.begin(), out.end(), [&](const Peak& p) {
      return circ(p.delay_bin, c.delay_bin, rows) <= guard && circ(p.doppler_bin, c.doppler_bin, cols) <= guard;
    });
    if (!blocked) out.push_back(c);
  }
  if (static_cast<int>(out.size()) < k)
    throw EstimationError("detect_peaks: found " + std::to_string(out.size()) + " local maxima, need " +
                          std::to_string(k));
  return out;
}

/// Doppler bins at or above half the axis length map to negative velocities.
inline Eigen::Index signed_doppler_bin(Eigen::Index bin, Eigen::Index n) { return bin >= (n + 1) / 2 ? bin - n : bin; }

struct RangeVelocity {
  double distance = 0.0;
  double radial_velocity = 0.0;
};

inline RangeVelocity bins_to_range_velocity(const Peak& peak, const RangeDopplerMap& map) {
  if (peak.delay_bin < 0 || peak.delay_bin >= map.delay_bins() || peak.doppler_bin < 0 ||
      peak.doppler_bin >= map.doppler_bins())
    throw DimensionError("bins_to_range_velocity: bin outside the map");
  return {static_cast<double>(peak.delay_bin) * map.range_bin_m,
          static_cast<double>(signed_doppler_bin(peak.doppler_bin, map.doppler_bins())) * map.velocity_bin_mps};
}

struct Detection {
  Peak peak;
  RangeVelocity rv;
  CVec antenna_amplitudes;  // complex range-Doppler value at the peak, per antenna
};

/// Full delay/Doppler chain on divided grids: per-antenna transform,
/// non-coherent combination, k peaks, conversion to physical units.
/// Value of the scaled range-Doppler transform of `div` at one (delay, Doppler)
/// bin, evaluated directly.
inline cd range_doppler_bin(const DividedGrid& div, Eigen::Index delay_bin, Eigen::Index doppler_bin, int pad_m,
                            int pad_l) {
  const Eigen::Index m = div.rows();
  const Eigen::Index l = div.cols();
  CVec fast(m), slow(l);
  for (Eigen::Index k = 0; k < m; ++k)
    fast(k) = std::polar(1.0, 2.0 * kPi * static_cast<double>(k * delay_bin % (m * pad_m)) / static_cast<double>(m * pad_m));
  for (Eigen::Index j = 0; j < l; ++j)
    slow(j) = std::polar(1.0, -2.0 * kPi * static_cast<double>(j * doppler_bin % (l * pad_l)) / static_cast<double>(l * pad_l));
  return (fast.transpose() * div * slow).value() / static_cast<double>(m * l);
}

inline std::vector<Detection> detect_targets(const std::vector<DividedGrid>& divs, int k, int pad_m, int pad_l,
                                             const RadarAxes& axes, int guard = 1) {
  if (divs.empty()) throw DimensionError("detect_targets: no antennas");
  RMat acc = RMat::Zero(divs.front().rows() * pad_m, divs.front().cols() * pad_l);
  for (const auto& d : divs) {
    const CMat rd = range_doppler_transform(d, pad_m, pad_l);
    acc += rd.cwiseAbs2().cwiseSqrt();
  }
  acc /= static_cast<double>(divs.size());
  const RangeDopplerMap map = make_map(std::move(acc), axes);
  std::vector<Detection> out;
  for (const auto& p : detect_peaks(map, k, guard)) {
    Detection det{p, bins_to_range_velocity(p, map), CVec(static_cast<Eigen::Index>(divs.size()))};
    for (std::size_t i = 0; i < divs.size(); ++i)
      det.antenna_amplitudes(static_cast<Eigen::Index>(i)) = range_doppler_bin(divs[i], p.delay_bin, p.doppler_bin, pad_m, pad_l);
    out.push_back(std::move(det));
  }
  return out;
}

struct MusicResult {
  RVec angles;    // azimuth grid
  RVec spectrum;  // P(theta) on the grid
  std::vector<double> estimates;
  double grid_step = 0.0;
  RVec eigenvalues;  // ascending
  CMat noise_subspace;
};

/// Sample covariance of the antenna snapshots taken from the per-antenna range
/// profiles (inverse DFT over subcarriers), Y = (1/L) sum_l D_l^T conj(D_l),
/// oriented so that b(theta) spans the signal subspace. The unscaled inverse
/// DFT satisfies F F^H = M I, so Y equals M times the covariance of the
/// divided grids themselves; it is formed that way.
inline CMat music_covariance(const std::vector<DividedGrid>& divs) {
  if (divs.empty()) throw DimensionError("music: no antennas");
  const Eigen::Index n_r = static_cast<Eigen::Index>(divs.size());
  const Eigen::Index m = divs.front().rows();
  const Eigen::Index l = divs.front().cols();
  CMat snapshots(n_r, m * l);
  for (Eigen::Index i = 0; i < n_r; ++i) {
    const auto& d = divs[static_cast<std::size_t>(i)];
    if (d.rows() != m || d.cols() != l) throw DimensionError("music: antenna grids differ in size");
    snapshots.row(i) = d.reshaped().transpose();
  }
  if (!snapshots.allFinite()) throw EstimationError("music: non-finite input");
  CMat y = CMat::Zero(n_r, n_r);
  y.selfadjointView<Eigen::Lower>().rankUpdate(snapshots, static_cast<double>(m) / static_cast<double>(l));
  return y.selfadjointView<Eigen::Lower>();
}

inline MusicResult music_from_covariance(const CMat& y, const UpaConfig& rx_cfg, int k, double grid_step,
                                         double elevation) {
  const int n_r = rx_cfg.size();
  if (y.rows() != n_r || y.cols() != n_r) throw DimensionError("music: covariance does not match the array");
  if (k < 1 || k >= n_r) throw ConfigError("music: need 1 <= k < N_r");
  if (!(grid_step > 0.0)) throw ConfigError("music: grid step must be positive");
  if (!y.allFinite()) throw EstimationError("music: non-finite covariance");

  Eigen::SelfAdjointEigenSolver<CMat> eig(y);
  if (eig.info() != Eigen::Success) throw EstimationError("music: eigendecomposition failed");

  MusicResult res;
  res.grid_step = grid_step;
  res.eigenvalues = eig.eigenvalues();
  res.noise_subspace = eig.eigenvectors().leftCols(n_r - k);
  const CMat us = eig.eigenvectors().rightCols(k);

  // b = u_az kron u_el, so Us_c^H b = u_az^T (conj(Us_c as nx x ny) u_el).
  const CVec u_el = ula_factor(rx_cfg.ny, std::sin(elevation));
  CMat w(rx_cfg.nx, k);
  for (int c = 0; c < k; ++c)
    for (int p = 0; p < rx_cfg.nx; ++p) {
      cd acc{};
      for (int q = 0; q < rx_cfg.ny; ++q) acc += std::conj(us(p * rx_cfg.ny + q, c)) * u_el(q);
      w(p, c) = acc;
    }

  const auto n_grid = static_cast<Eigen::Index>(std::floor(kPi / grid_step + 1e-9)) + 1;
  res.angles.resize(n_grid);
  res.spectrum.resize(n_grid);
  const double cos_el = std::cos(elevation);
  for (Eigen::Index g = 0; g < n_grid; ++g) {
    const double theta = -kPi / 2.0 + static_cast<double>(g) * grid_step;
    const CVec u_az = ula_factor(rx_cfg.nx, std::sin(theta) * cos_el);
    const double sig = (u_az.transpose() * w).squaredNorm();
    res.angles(g) = theta;
    res.spectrum(g) = 1.0 / std::max(1.0 - sig, 1e-300);
  }

  std::vector<Eigen::Index> maxima;
  for (Eigen::Index g = 0; g < n_grid; ++g) {
    const bool left = g == 0 || res.spectrum(g) >= res.spectrum(g - 1);
    const bool right = g == n_grid - 1 || res.spectrum(g) > res.spectrum(g + 1);
    if (left && right) maxima.push_back(g);
  }
  std::stable_sort(maxima.begin(), maxima.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return res.spectrum(a) > res.spectrum(b); });
  for (std::size_t i = 0; i < maxima.size() && static_cast<int>(i) < k; ++i) res.estimates.push_back(res.angles(maxima[i]));
  return res;
}

/// MUSIC azimuth search at a known elevation with model order k.
inline MusicResult music_doa(const std::vector<DividedGrid>& divs, const UpaConfig& rx_cfg, int k, double grid_step,
                             double elevation) {
  if (static_cast<int>(divs.size()) != rx_cfg.size()) throw DimensionError("music: antenna count mismatch");
  return music_from_covariance(music_covariance(divs), rx_cfg, k, grid_step, elevation);
}

/// b^H U_n U_n^H b for the steering vector at (azimuth, elevation).
inline double noise_projection(const MusicResult& res, const UpaConfig& rx_cfg, double azimuth, double elevation) {
  const CVec b = steering_vector(rx_cfg, azimuth, elevation).weights();
  return (res.noise_subspace.adjoint() * b).squaredNorm();
}

/// beta = amplitude / (zeta sqrt(p) a^H f): `echo_amplitude` is the receive-
/// combined peak value b^H(theta) x and `tx_gain_model` the known
/// zeta sqrt(p) a^H(theta) f.
inline cd estimate_beta(double distance, cd echo_amplitude, cd tx_gain_model) {
  if (!(distance > 0.0)) throw EstimationError("estimate_beta: distance must be positive");
  if (std::abs(tx_gain_model) == 0.0) throw EstimationError("estimate_beta: zero transmit gain model");
  return echo_amplitude / tx_gain_model;
}

struct MeasurementNoise {
  double sigma_theta = 0.1;   // rad
  double sigma_d = 0.2;       // m
  double sigma_v = 0.15;      // m/s
  double sigma_beta = 1e-3;
  double cos_floor = 0.05;    // minimum |radial projection| for a usable velocity

  void validate() const {
    if (!(sigma_theta > 0.0 && sigma_d > 0.0 && sigma_v > 0.0 && sigma_beta > 0.0))
      throw ConfigError("measurement noise: sigmas must be positive");
    if (cos_floor < 0.0 || cos_floor >= 1.0) throw ConfigError("measurement noise: cos_floor must lie in [0, 1)");
  }
};

struct Measurement {
  double azimuth = 0.0;
  double distance = 0.0;
  double speed = 0.0;
  double radial_velocity = 0.0;
  cd reflection{0.0, 0.0};
  Eigen::Matrix4d covariance = Eigen::Matrix4d::Identity();
  bool velocity_valid = true;

  Eigen::Vector4d vector() const { return {azimuth, distance, speed, std::abs(reflection)}; }
};

/// Converts the radial velocity to road speed through the projection factor
/// of the road direction on the line of sight; below `cos_floor` the velocity
/// is flagged invalid and the tracker keeps its prediction. `variance_scale`
/// multiplies every variance (1 for fixed noise).
inline Measurement assemble_measurement(double azimuth, double distance, double radial_velocity, cd beta,
                                        double elevation, const Eigen::Vector2d& road_axis,
                                        const MeasurementNoise& noise, double variance_scale = 1.0) {
  Measurement y;
  y.azimuth = azimuth;
  y.distance = distance;
  y.radial_velocity = radial_velocity;
  y.reflection = beta;
  const double proj = radial_projection(road_axis, azimuth, elevation);
  y.velocity_valid = std::abs(proj) > noise.cos_floor;
  y.speed = y.velocity_valid ? radial_velocity / proj : 0.0;
  y.covariance = Eigen::Vector4d{noise.sigma_theta * noise.sigma_theta, noise.sigma_d * noise.sigma_d,
                                 noise.sigma_v * noise.sigma_v, noise.sigma_beta * noise.sigma_beta}
                     .asDiagonal();
  y.covariance *= variance_scale;
  return y;
}

}  // namespace isac
