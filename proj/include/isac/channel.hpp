#pragma once

// Radar echo at the BS receive array and the beamformed downlink at the
// vehicle, both at resource-element level with complex AWGN.

#include "isac/array.hpp"
#include "isac/common.hpp"
#include "isac/rng.hpp"
#include "isac/scenario.hpp"
#include "isac/waveform.hpp"

#include <span>
#include <vector>

namespace isac {

struct SnrSpec {
  double transmit_snr = 1.0;  // p / sigma^2, linear
  double power = 1.0;

  double noise_var() const { return power / transmit_snr; }

  static SnrSpec from_db(double snr_db) { return SnrSpec{db_to_linear(snr_db), 1.0}; }

  void validate() const {
    if (!(transmit_snr > 0.0) || !(power > 0.0)) throw ConfigError("snr: transmit SNR and power must be positive");
  }
};

/// Echo observed on every BS receive antenna: one M x L matrix per antenna.
struct EchoCube {
  std::vector<CMat> data;

  std::size_t antennas() const { return data.size(); }
};

/// One communication path: BS-side departure geometry, vehicle-side arrival
/// angles and the complex channel coefficient.
struct LinkPath {
  TargetParams departure;
  double arrival_azimuth = 0.0;
  double arrival_elevation = 0.0;
  cd gain{0.0, 0.0};
};

struct LinkSample {
  CMat rx_symbols;
  cd effective_gain{0.0, 0.0};
  double noise_var = 0.0;

  double receive_snr() const { return std::norm(effective_gain) / noise_var; }
};

/// LoS free-space reference: |gain| = reference_gain * reference_distance / d.
struct LinkBudget {
  double reference_gain = 1.0;
  double reference_distance = 1.0;
  double carrier_hz = 35e9;
};

/// Noise-free tx array response a^H(theta, phi) f.
inline cd tx_response(const UpaConfig& tx_cfg, const BeamVector& f, double azimuth, double elevation) {
  if (f.size() != tx_cfg.size()) throw DimensionError("tx beam length does not match the tx array");
  return steering_vector(tx_cfg, azimuth, elevation).inner(f);
}

/// r_i(m,l) = zeta sqrt(p) sum_k beta_k [b(theta_k)]_i a^H(theta_k) f s(m,l)
///            e^{j 2 pi mu_k l T_s} e^{-j 2 pi m df tau_k} + z,
/// with zeta = sqrt(N_t N_r). `first_symbol` offsets the slow-time index so
/// consecutive slots stay phase-continuous. A null `rng` gives the noiseless echo.
inline EchoCube synthesize_echo(const ResourceGrid& grid, std::span<const TargetParams> targets,
                                const BeamVector& tx_beam, const UpaConfig& tx_cfg, const UpaConfig& rx_cfg,
                                const SnrSpec& snr, Rng* rng = nullptr, long first_symbol = 0) {
  if (targets.empty()) throw ConfigError("synthesize_echo: need at least one target");
  if (tx_beam.size() != tx_cfg.size()) throw DimensionError("synthesize_echo: tx beam does not match the tx array");
  const Eigen::Index m = grid.m_subcarriers();
  const Eigen::Index l = grid.l_symbols();
  const int n_r = rx_cfg.size();
  const double zeta = std::sqrt(static_cast<double>(tx_cfg.size()) * n_r);
  const double df = grid.numerology.scs;
  const double ts = grid.numerology.symbol_duration;

  EchoCube echo;
  echo.data.assign(static_cast<std::size_t>(n_r), CMat::Zero(m, l));
  CVec eta(m);
  CVec omega(l);
  for (const auto& t : targets) {
    const cd coeff = zeta * std::sqrt(snr.power) * t.reflection * tx_response(tx_cfg, tx_beam, t.azimuth, t.elevation);
    for (Eigen::Index k = 0; k < m; ++k) eta(k) = std::polar(1.0, -2.0 * kPi * static_cast<double>(k) * df * t.delay);
    for (Eigen::Index j = 0; j < l; ++j)
      omega(j) = std::polar(1.0, 2.0 * kPi * t.doppler * static_cast<double>(first_symbol + j) * ts);
    const CMat shaped = (eta * omega.transpose()).cwiseProduct(grid.symbols) * coeff;
    const CVec b = steering_vector(rx_cfg, t.azimuth, t.elevation).weights();
    for (int i = 0; i < n_r; ++i) echo.data[static_cast<std::size_t>(i)] += b(i) * shaped;
  }
  if (rng) {
    const double var = snr.noise_var();
    for (auto& a : echo.data)
      for (Eigen::Index j = 0; j < l; ++j)
        for (Eigen::Index k = 0; k < m; ++k) a(k, j) += rng->complex_gaussian(var);
  }
  return echo;
}

/// Bracketed channel term zeta~ sqrt(p) sum_k alpha_k (v^H u_k)(a_k^H f),
/// zeta~ = sqrt(N_t M_r).
inline cd effective_link_gain(std::span<const LinkPath> paths, const BeamVector& tx_beam, const BeamVector& rx_beam,
                              const UpaConfig& tx_cfg, const UpaConfig& rx_cfg, double power = 1.0) {
  if (rx_beam.size() != rx_cfg.size()) throw DimensionError("rx beam does not match the vehicle array");
  const double zeta = std::sqrt(static_cast<double>(tx_cfg.size()) * rx_cfg.size());
  cd sum{0.0, 0.0};
  for (const auto& p : paths) {
    const cd rx = rx_beam.inner(steering_vector(rx_cfg, p.arrival_azimuth, p.arrival_elevation));
    sum += p.gain * rx * tx_response(tx_cfg, tx_beam, p.departure.azimuth, p.departure.elevation);
  }
  return zeta * std::sqrt(power) * sum;
}

inline LinkSample transmit_link(const ResourceGrid& grid, std::span<const LinkPath> paths, const BeamVector& tx_beam,
                                const BeamVector& rx_beam, const UpaConfig& tx_cfg, const UpaConfig& rx_cfg,
                                const SnrSpec& snr, Rng* rng = nullptr) {
  LinkSample out;
  out.effective_gain = effective_link_gain(paths, tx_beam, rx_beam, tx_cfg, rx_cfg, snr.power);
  out.noise_var = snr.noise_var();
  out.rx_symbols = grid.symbols * out.effective_gain;
  if (rng)
    for (Eigen::Index j = 0; j < out.rx_symbols.cols(); ++j)
      for (Eigen::Index k = 0; k < out.rx_symbols.rows(); ++k) out.rx_symbols(k, j) += rng->complex_gaussian(out.noise_var);
  return out;
}

/// Paths for the current vehicle position: the LoS path follows a 1/d law,
/// each static scatterer adds a single-bounce NLoS path whose power sits
/// `relative_power_db` relative to the LoS path. All paths carry their
/// carrier propagation phase.
inline std::vector<LinkPath> path_gains_from_scene(std::span<const ScattererSpec> scene, const VehicleState& vstate,
                                                   const SceneGeometry& geom, const LinkBudget& budget) {
  if (scene.empty()) throw ConfigError("path_gains_from_scene: empty scene");
  const double lambda = kSpeedOfLight / budget.carrier_hz;
  const Eigen::Vector3d veh = vehicle_point(geom, vstate);
  const double d_los = (veh - geom.bs_position).norm();
  if (!(d_los > 0.0)) throw GeometryError("path_gains_from_scene: vehicle colocated with the BS");
  const double los_mag = budget.reference_gain * budget.reference_distance / d_los;

  std::vector<LinkPath> paths;
  for (const auto& s : scene) {
    LinkPath p;
    p.departure = observe(geom, vstate, s, budget.carrier_hz);
    if (s.kind == ScattererKind::LosVehicle) {
      std::tie(p.arrival_azimuth, p.arrival_elevation) = vehicle_angles(geom.bs_position - veh);
      p.gain = std::polar(los_mag, s.phase_rad - 2.0 * kPi * d_los / lambda);
    } else {
      std::tie(p.arrival_azimuth, p.arrival_elevation) = vehicle_angles(s.position - veh);
      const double length = (s.position - geom.bs_position).norm() + (veh - s.position).norm();
      const double mag = los_mag * std::pow(10.0, s.relative_power_db / 20.0);
      p.gain = std::polar(mag, s.phase_rad - 2.0 * kPi * length / lambda);
    }
    paths.push_back(p);
  }
  return paths;
}

}  // namespace isac
