#pragma once

// Per-slot simulation of the ISAC scheme and the codebook baseline, Monte
// Carlo orchestration and the observables (RMSE, BER, throughput).

#include "isac/array.hpp"
#include "isac/channel.hpp"
#include "isac/config.hpp"
#include "isac/nr_frame.hpp"
#include "isac/radar_est.hpp"
#include "isac/rng.hpp"
#include "isac/scenario.hpp"
#include "isac/tracker.hpp"
#include "isac/waveform.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace isac {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct SlotRecord {
  std::size_t slot = 0;
  double time = 0.0;
  double theta_true = 0.0;
  double d_true = 0.0;
  double v_true = 0.0;
  double theta_meas = kNaN;
  double d_meas = kNaN;
  double v_meas = kNaN;
  double theta_est = kNaN;
  double d_est = kNaN;
  double v_est = kNaN;
  double beam_tx = 0.0;
  double beam_rx = 0.0;
  double snr_rx_db = 0.0;
  long bit_errors = 0;
  long bits = 0;
  long data_re = 0;
};

struct TrialSummary {
  double angle_rmse = 0.0;        // tracked / selected azimuth vs truth
  double distance_rmse = kNaN;    // ISAC only
  double beam_rmse = 0.0;         // transmit beam azimuth vs truth
  double meas_angle_rmse = kNaN;  // raw radar azimuth vs truth (ISAC only)
  long bit_errors = 0;
  long bits = 0;
  double ber = 0.0;
  double throughput_mbps = 0.0;
  double oh_fraction = 0.0;
  long data_re = 0;
};

struct TrialResult {
  Scheme scheme = Scheme::Isac;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::vector<SlotRecord> records;
  TrialSummary summary;
};

// ---------------------------------------------------------------------------
// Building blocks shared by both schemes.

/// RE layout of every slot of one pattern period over the full bandwidth.
struct SlotLayouts {
  std::vector<ReTypeGrid> types;
  std::vector<ReMask> data;
  std::vector<long> data_re;
  ReLedger ledger;

  static SlotLayouts make(const FrameConfig& frame, int n_prb) {
    SlotLayouts out;
    out.ledger = build_ledger(frame);
    const RePattern rp = re_positions(frame);
    for (std::size_t s = 0; s < rp.slots.size(); ++s) {
      out.types.push_back(slot_layout(rp, s, n_prb));
      out.data.push_back(out.types.back().mask(ReType::Data));
      out.data_re.push_back(out.types.back().count(ReType::Data));
    }
    return out;
  }
};

struct SlotWaveform {
  ResourceGrid grid;
  BitPayload payload;
};

/// Payload QAM on data REs, random QPSK on reference-signal REs, zero on
/// guard and uplink REs.
inline SlotWaveform make_slot_waveform(const ReTypeGrid& types, const ReMask& data, long data_re, int n_prb,
                                       int q_m, const Numerology& num, Rng& payload_rng, Rng& pilot_rng) {
  SlotWaveform w;
  w.payload = random_payload(static_cast<std::size_t>(data_re), q_m, payload_rng);
  w.grid = build_grid(n_prb, kSymbolsPerSlot, w.payload, num, &data);
  const BitPayload pilot_bits = random_payload(static_cast<std::size_t>(types.rows()) * types.cols(), 2, pilot_rng);
  const auto pilots = qam_modulate(pilot_bits);
  for (int l = 0; l < types.cols(); ++l)
    for (int k = 0; k < types.rows(); ++k) {
      const ReType t = types(k, l);
      if (t == ReType::Dmrs || t == ReType::Csirs) w.grid.symbols(k, l) = pilots[static_cast<std::size_t>(l) * types.rows() + k];
    }
  return w;
}

/// Coherent detection with perfect knowledge of the effective gain; counts
/// bit errors on the data REs.
inline long count_bit_errors(const LinkSample& sample, const ReMask& data, const BitPayload& sent) {
  const double g2 = std::norm(sample.effective_gain);
  std::vector<cd> eq;
  eq.reserve(static_cast<std::size_t>(data.count()));
  for (Eigen::Index l = 0; l < data.cols(); ++l)
    for (Eigen::Index k = 0; k < data.rows(); ++k)
      if (data(k, l)) eq.push_back(g2 > 0.0 ? sample.rx_symbols(k, l) * std::conj(sample.effective_gain) / g2 : cd{});
  const BitPayload got = qam_demodulate(eq, sent.modulation_order);
  long errors = 0;
  for (std::size_t i = 0; i < sent.bits.size(); ++i) errors += sent.bits[i] != got.bits[i];
  return errors;
}

/// Precomputed codebook responses for exhaustive beam-pair search.
struct BeamSearch {
  Codebook tx_cb;
  Codebook rx_cb;
  CMat tx_weights;  // N_t x B_t
  CMat rx_weights;  // M_r x B_r

  static BeamSearch make(const SimConfig& cfg) {
    BeamSearch s;
    s.tx_cb = dft_codebook(cfg.tx, cfg.tx_codebook_o_az, cfg.tx_codebook_o_el);
    s.rx_cb = dft_codebook(cfg.vehicle, cfg.vehicle_codebook_o_az, cfg.vehicle_codebook_o_el);
    s.tx_weights.resize(cfg.tx.size(), static_cast<Eigen::Index>(s.tx_cb.beams.size()));
    for (std::size_t b = 0; b < s.tx_cb.beams.size(); ++b) s.tx_weights.col(static_cast<Eigen::Index>(b)) = s.tx_cb.beams[b].beam.weights();
    s.rx_weights.resize(cfg.vehicle.size(), static_cast<Eigen::Index>(s.rx_cb.beams.size()));
    for (std::size_t b = 0; b < s.rx_cb.beams.size(); ++b) s.rx_weights.col(static_cast<Eigen::Index>(b)) = s.rx_cb.beams[b].beam.weights();
    return s;
  }

  /// Pair with maximal |effective gain|; ties go to the lowest tx index, then
  /// the lowest rx index.
  std::pair<std::size_t, std::size_t> best_pair(std::span<const LinkPath> paths, const SimConfig& cfg) const {
    const auto k = static_cast<Eigen::Index>(paths.size());
    CMat a(cfg.tx.size(), k), u(cfg.vehicle.size(), k);
    CVec gains(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      const auto& p = paths[static_cast<std::size_t>(i)];
      a.col(i) = steering_vector(cfg.tx, p.departure.azimuth, p.departure.elevation).weights();
      u.col(i) = steering_vector(cfg.vehicle, p.arrival_azimuth, p.arrival_elevation).weights();
      gains(i) = p.gain;
    }
    // a^H f for every tx beam, v^H u for every rx beam.
    const CMat tx_resp = (tx_weights.adjoint() * a).conjugate();  // B_t x K
    const CMat rx_resp = rx_weights.adjoint() * u;                // B_r x K
    const CMat total = tx_resp * gains.asDiagonal() * rx_resp.transpose();
    const RMat mag = total.cwiseAbs2();
    std::pair<std::size_t, std::size_t> best{0, 0};
    double best_val = -1.0;
    for (Eigen::Index t = 0; t < mag.rows(); ++t)
      for (Eigen::Index r = 0; r < mag.cols(); ++r)
        if (mag(t, r) > best_val) {
          best_val = mag(t, r);
          best = {static_cast<std::size_t>(t), static_cast<std::size_t>(r)};
        }
    return best;
  }
};

inline std::vector<TargetParams> radar_targets(const SimConfig& cfg, const VehicleState& v) {
  std::vector<TargetParams> out;
  for (const auto& s : cfg.scatterers) out.push_back(observe(cfg.geom, v, s, cfg.link.carrier_hz));
  return out;
}

inline TargetParams vehicle_truth(const SimConfig& cfg, const VehicleState& v) {
  for (const auto& s : cfg.scatterers)
    if (s.kind == ScattererKind::LosVehicle) return observe(cfg.geom, v, s, cfg.link.carrier_hz);
  throw ConfigError("scene has no vehicle");
}

/// BS-side elevation of the vehicle implied by a range and the known heights.
inline double elevation_from_range(const SimConfig& cfg, double distance) {
  const double dh = cfg.geom.vehicle_height - cfg.geom.bs_position.z();
  const double ratio = std::clamp(dh / std::max(distance, 1e-9), -0.999, 0.999);
  return std::asin(ratio);
}

inline double wrap_angle(double a) { return std::remainder(a, 2.0 * kPi); }

inline void summarize(TrialResult& r, const SimConfig& cfg, const ReLedger& ledger) {
  auto rmse = [&](auto member_est) {
    double acc = 0.0;
    std::size_t n = 0;
    for (const auto& s : r.records) {
      const auto [est, truth] = member_est(s);
      if (std::isnan(est)) continue;
      acc += (est - truth) * (est - truth);
      ++n;
    }
    return n ? std::sqrt(acc / static_cast<double>(n)) : kNaN;
  };
  TrialSummary& sm = r.summary;
  sm.angle_rmse = rmse([](const SlotRecord& s) { return std::pair{s.theta_est, s.theta_true}; });
  sm.distance_rmse = rmse([](const SlotRecord& s) { return std::pair{s.d_est, s.d_true}; });
  sm.beam_rmse = rmse([](const SlotRecord& s) { return std::pair{s.beam_tx, s.theta_true}; });
  sm.meas_angle_rmse = rmse([](const SlotRecord& s) { return std::pair{s.theta_meas, s.theta_true}; });
  sm.bit_errors = sm.bits = sm.data_re = 0;
  for (const auto& s : r.records) {
    sm.bit_errors += s.bit_errors;
    sm.bits += s.bits;
    sm.data_re += s.data_re;
  }
  sm.ber = sm.bits ? static_cast<double>(sm.bit_errors) / static_cast<double>(sm.bits) : 0.0;
  sm.oh_fraction = overhead_fraction(ledger);
  ThroughputParams tp;
  tp.carriers = cfg.carriers;
  tp.layers = cfg.layers;
  tp.modulation_order = cfg.modulation_order;
  tp.n_prb = cfg.n_prb;
  tp.symbol_duration = cfg.numerology().symbol_duration;
  tp.ber = std::min(sm.ber, 1.0 - sm.oh_fraction);
  tp.overhead = sm.oh_fraction;
  sm.throughput_mbps = throughput(tp);
}

// ---------------------------------------------------------------------------
// ISAC scheme

struct RadarObservation {
  Measurement measurement;
  MusicResult music;
  std::vector<Detection> detections;
};

/// Full radar chain on one coherent processing interval: range/Doppler
/// detection, association with the prediction, MUSIC azimuth at the implied
/// elevation and beta back-calculation.
inline RadarObservation radar_measure(const SimConfig& cfg, const std::vector<DividedGrid>& divs,
                                      const BeamVector& tx_beam, double ref_azimuth,
                                      const std::optional<KinState>& prediction, double variance_scale) {
  const Numerology num = cfg.numerology();
  const RadarAxes axes = RadarAxes::from(num, cfg.link.carrier_hz);
  const int k = static_cast<int>(cfg.scatterers.size());

  RadarObservation obs;
  obs.detections = detect_targets(divs, k, cfg.radar.pad_m, cfg.radar.pad_l, axes, cfg.radar.peak_guard);
  std::size_t pick = 0;  // strongest when there is no prediction
  if (prediction) {
    const double range_bin = kSpeedOfLight / (2.0 * static_cast<double>(divs.front().rows() * cfg.radar.pad_m) * axes.scs);
    const double vel_bin = kSpeedOfLight / (2.0 * axes.carrier_hz * static_cast<double>(divs.front().cols() * cfg.radar.pad_l) *
                                            axes.symbol_duration);
    const double el = elevation_from_range(cfg, prediction->distance);
    const double v_rad = prediction->speed * radial_projection(cfg.geom.road_axis, prediction->azimuth, el);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < obs.detections.size(); ++i) {
      const auto& rv = obs.detections[i].rv;
      const double cost = std::pow((rv.distance - prediction->distance) / range_bin, 2) +
                          std::pow((rv.radial_velocity - v_rad) / vel_bin, 2);
      if (cost < best) {
        best = cost;
        pick = i;
      }
    }
  }
  const Detection& det = obs.detections[pick];
  const double distance = std::max(det.rv.distance, 1e-3);
  const double elevation = elevation_from_range(cfg, distance);

  obs.music = music_doa(divs, cfg.radar_rx, k, cfg.radar.music_grid_step, elevation);
  double azimuth = obs.music.estimates.front();
  for (double a : obs.music.estimates)
    if (std::abs(wrap_angle(a - ref_azimuth)) < std::abs(wrap_angle(azimuth - ref_azimuth))) azimuth = a;

  const CVec b = steering_vector(cfg.radar_rx, azimuth, elevation).weights();
  const cd amplitude = b.dot(det.antenna_amplitudes);
  const double zeta = std::sqrt(static_cast<double>(cfg.tx.size()) * cfg.radar_rx.size());
  const cd tx_model = zeta * tx_response(cfg.tx, tx_beam, azimuth, elevation);
  const cd beta = std::abs(tx_model) > 0.0 ? estimate_beta(distance, amplitude, tx_model) : cd{};

  obs.measurement = assemble_measurement(azimuth, det.rv.distance, det.rv.radial_velocity, beta, elevation,
                                         cfg.geom.road_axis, cfg.measurement, variance_scale);
  return obs;
}

inline double measurement_variance_scale(const SimConfig& cfg, double snr_db) {
  if (cfg.measurement_mode == MeasurementNoiseMode::Fixed) return 1.0;
  return db_to_linear(cfg.snr_reference_db - snr_db);
}

inline TrialResult run_isac_trial(const SimConfig& cfg, std::size_t trial) {
  cfg.validate();
  const Numerology num = cfg.numerology();
  const FrameConfig frame = cfg.frame_for(Scheme::Isac);
  const SlotLayouts layouts = SlotLayouts::make(frame, cfg.n_prb);
  const auto truth = trajectory(cfg.geom, cfg.initial, cfg.slot_duration, cfg.t_max);
  const BeamSearch search = BeamSearch::make(cfg);
  const SnrSpec snr = SnrSpec::from_db(cfg.transmit_snr_db);
  const double var_scale = measurement_variance_scale(cfg, cfg.transmit_snr_db);

  Rng payload_rng(cfg.seed, trial, Stream::Payload);
  Rng pilot_rng(cfg.seed, trial, Stream::Pilots);
  Rng comm_rng(cfg.seed, trial, Stream::CommNoise);
  Rng radar_rng(cfg.seed, trial, Stream::RadarNoise);

  TrialResult res{Scheme::Isac, trial, cfg.seed, {}, {}};
  res.records.reserve(truth.size());
  std::optional<EkfState> ekf;
  double ia_tx_az = 0.0, ia_tx_el = 0.0, ia_rx_az = 0.0, ia_rx_el = 0.0;
  std::vector<DividedGrid> cpi;
  int cpi_fill = 0;

  for (std::size_t n = 0; n < truth.size(); ++n) {
    const VehicleState& vs = truth[n];
    const auto paths = path_gains_from_scene(cfg.scatterers, vs, cfg.geom, cfg.link);
    const TargetParams veh = vehicle_truth(cfg, vs);

    SlotRecord rec;
    rec.slot = n;
    rec.time = vs.time;
    rec.theta_true = veh.azimuth;
    rec.d_true = veh.distance;
    rec.v_true = vs.speed;

    if (n == 0) {
      // One-shot initial access sweep.
      const auto [t, r] = search.best_pair(paths, cfg);
      ia_tx_az = search.tx_cb.beams[t].azimuth;
      ia_tx_el = search.tx_cb.beams[t].elevation;
      ia_rx_az = search.rx_cb.beams[r].azimuth;
      ia_rx_el = search.rx_cb.beams[r].elevation;
    }

    double tx_az = ia_tx_az, tx_el = ia_tx_el, rx_az = ia_rx_az, rx_el = ia_rx_el;
    if (ekf) {
      ekf = predict(*ekf, cfg.process, cfg.slot_duration);
      const BeamAngles ang = beam_angles(*ekf);
      tx_az = ang.tx_azimuth;
      rx_az = ang.rx_azimuth;
      tx_el = elevation_from_range(cfg, ekf->one_step.distance);
      rx_el = -tx_el;
    }
    const BeamVector f = conjugate_beamformer(cfg.tx, tx_az, tx_el);
    const BeamVector v = conjugate_beamformer(cfg.vehicle, rx_az, rx_el);
    rec.beam_tx = tx_az;
    rec.beam_rx = rx_az;

    const std::size_t sp = n % layouts.types.size();
    const SlotWaveform wf = make_slot_waveform(layouts.types[sp], layouts.data[sp], layouts.data_re[sp], cfg.n_prb,
                                               cfg.modulation_order, num, payload_rng, pilot_rng);
    const LinkSample link = transmit_link(wf.grid, paths, f, v, cfg.tx, cfg.vehicle, snr, &comm_rng);
    rec.snr_rx_db = linear_to_db(link.receive_snr());
    rec.bit_errors = count_bit_errors(link, layouts.data[sp], wf.payload);
    rec.bits = static_cast<long>(wf.payload.bits.size());
    rec.data_re = layouts.data_re[sp];

    const auto targets = radar_targets(cfg, vs);
    const EchoCube echo = synthesize_echo(wf.grid, targets, f, cfg.tx, cfg.radar_rx, snr, &radar_rng,
                                          static_cast<long>(n) * kSymbolsPerSlot);
    auto divs = matched_division(echo, wf.grid);
    if (cpi_fill == 0) {
      cpi = std::move(divs);
    } else {
      for (std::size_t i = 0; i < cpi.size(); ++i) {
        DividedGrid joined(cpi[i].rows(), cpi[i].cols() + divs[i].cols());
        joined << cpi[i], divs[i];
        cpi[i] = std::move(joined);
      }
    }
    ++cpi_fill;

    if (cpi_fill == cfg.radar.cpi_slots) {
      cpi_fill = 0;
      std::optional<KinState> pred;
      if (ekf) pred = ekf->one_step;
      const RadarObservation obs = radar_measure(cfg, cpi, f, tx_az, pred, var_scale);
      const Measurement& y = obs.measurement;
      rec.theta_meas = y.azimuth;
      rec.d_meas = y.distance;
      rec.v_meas = y.velocity_valid ? y.speed : kNaN;
      ekf = ekf ? update(*ekf, y) : initialize(y, cfg.radar.init_mse_scale);
    } else if (ekf) {
      ekf = coast(*ekf);
    }
    if (ekf) {
      rec.theta_est = ekf->estimate.azimuth;
      rec.d_est = ekf->estimate.distance;
      rec.v_est = ekf->estimate.speed;
    }
    res.records.push_back(rec);
  }
  summarize(res, cfg, layouts.ledger);
  return res;
}

// ---------------------------------------------------------------------------
// Codebook baseline

/// Every CSI-RS period the BS sweeps its codebook; the report (best beam pair)
/// takes effect one period later and the beams stay fixed in between. Slot 0
/// performs a one-shot initial-access sweep that applies immediately.
inline TrialResult run_codebook_trial(const SimConfig& cfg, std::size_t trial) {
  cfg.validate();
  const Numerology num = cfg.numerology();
  const FrameConfig frame = cfg.frame_for(Scheme::Codebook);
  const SlotLayouts layouts = SlotLayouts::make(frame, cfg.n_prb);
  const auto truth = trajectory(cfg.geom, cfg.initial, cfg.slot_duration, cfg.t_max);
  const BeamSearch search = BeamSearch::make(cfg);
  const SnrSpec snr = SnrSpec::from_db(cfg.transmit_snr_db);
  const auto period = static_cast<std::size_t>(cfg.frame.csirs_period_slots);

  Rng payload_rng(cfg.seed, trial, Stream::Payload);
  Rng pilot_rng(cfg.seed, trial, Stream::Pilots);
  Rng comm_rng(cfg.seed, trial, Stream::CommNoise);

  TrialResult res{Scheme::Codebook, trial, cfg.seed, {}, {}};
  res.records.reserve(truth.size());
  std::pair<std::size_t, std::size_t> active{0, 0};
  std::optional<std::pair<std::size_t, std::size_t>> pending;

  for (std::size_t n = 0; n < truth.size(); ++n) {
    const VehicleState& vs = truth[n];
    const auto paths = path_gains_from_scene(cfg.scatterers, vs, cfg.geom, cfg.link);
    const TargetParams veh = vehicle_truth(cfg, vs);

    if (n % period == 0) {
      const auto found = search.best_pair(paths, cfg);
      if (n == 0) {
        active = found;
      } else {
        if (pending) active = *pending;
      }
      pending = found;
    }

    const auto& tb = search.tx_cb.beams[active.first];
    const auto& rb = search.rx_cb.beams[active.second];

    SlotRecord rec;
    rec.slot = n;
    rec.time = vs.time;
    rec.theta_true = veh.azimuth;
    rec.d_true = veh.distance;
    rec.v_true = vs.speed;
    rec.theta_est = tb.azimuth;
    rec.beam_tx = tb.azimuth;
    rec.beam_rx = rb.azimuth;

    const std::size_t sp = n % layouts.types.size();
    const SlotWaveform wf = make_slot_waveform(layouts.types[sp], layouts.data[sp], layouts.data_re[sp], cfg.n_prb,
                                               cfg.modulation_order, num, payload_rng, pilot_rng);
    const LinkSample link = transmit_link(wf.grid, paths, tb.beam, rb.beam, cfg.tx, cfg.vehicle, snr, &comm_rng);
    rec.snr_rx_db = linear_to_db(link.receive_snr());
    rec.bit_errors = count_bit_errors(link, layouts.data[sp], wf.payload);
    rec.bits = static_cast<long>(wf.payload.bits.size());
    rec.data_re = layouts.data_re[sp];
    res.records.push_back(rec);
  }
  summarize(res, cfg, layouts.ledger);
  return res;
}

inline TrialResult run_trial(const SimConfig& cfg, Scheme scheme, std::size_t trial) {
  return scheme == Scheme::Isac ? run_isac_trial(cfg, trial) : run_codebook_trial(cfg, trial);
}

/// Runs `trials` independent trials, concurrently when threads allow. The
/// result order is the trial index regardless of completion order.
inline std::vector<TrialResult> run_trials(const SimConfig& cfg, Scheme scheme, int trials) {
  if (trials < 1) throw ConfigError("run_trials: trials must be >= 1");
  std::vector<TrialResult> out(static_cast<std::size_t>(trials));
  const unsigned hw = std::max(1U, std::thread::hardware_concurrency());
  const unsigned workers =
      std::min<unsigned>(static_cast<unsigned>(trials), cfg.threads > 0 ? static_cast<unsigned>(cfg.threads) : hw);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (std::size_t i = next++; i < out.size(); i = next++) {
      try {
        out[i] = run_trial(cfg, scheme, i);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

// ---------------------------------------------------------------------------
// Observables

enum class ErrorField { Angle, Beam, Distance };

inline ErrorField error_field_from_string(const std::string& s) {
  if (s == "angle") return ErrorField::Angle;
  if (s == "beam") return ErrorField::Beam;
  if (s == "distance") return ErrorField::Distance;
  throw ConfigError("unknown error field '" + s + "' (expected angle, beam or distance)");
}

inline double slot_error(const SlotRecord& s, ErrorField f) {
  switch (f) {
    case ErrorField::Angle: return std::abs(s.theta_est - s.theta_true);
    case ErrorField::Beam: return std::abs(s.beam_tx - s.theta_true);
    case ErrorField::Distance: return std::abs(s.d_est - s.d_true);
  }
  return kNaN;
}

struct CdfPoint {
  double value = 0.0;
  double probability = 0.0;
};

/// Empirical CDF of the absolute per-slot errors pooled across trials.
/// Slots without an estimate are skipped.
inline std::vector<CdfPoint> empirical_cdf(std::vector<double> errors) {
  std::erase_if(errors, [](double e) { return std::isnan(e); });
  std::sort(errors.begin(), errors.end());
  std::vector<CdfPoint> cdf;
  const double n = static_cast<double>(errors.size());
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (i + 1 < errors.size() && errors[i + 1] == errors[i]) continue;
    cdf.push_back({errors[i], static_cast<double>(i + 1) / n});
  }
  return cdf;
}

inline std::vector<CdfPoint> rmse_cdf(std::span<const TrialResult> results, ErrorField field) {
  if (results.empty()) throw ConfigError("rmse_cdf: no results");
  std::vector<double> errors;
  for (const auto& r : results)
    for (const auto& s : r.records) errors.push_back(slot_error(s, field));
  return empirical_cdf(std::move(errors));
}

/// F(x) of a step CDF.
inline double cdf_at(const std::vector<CdfPoint>& cdf, double x) {
  auto it = std::upper_bound(cdf.begin(), cdf.end(), x, [](double v, const CdfPoint& p) { return v < p.value; });
  return it == cdf.begin() ? 0.0 : std::prev(it)->probability;
}

/// True when `left` lies on or left of `right` everywhere: F_left(x) >= F_right(x).
inline bool stochastically_dominates(const std::vector<CdfPoint>& left, const std::vector<CdfPoint>& right) {
  for (const auto& cdf : {left, right})
    for (const auto& p : cdf)
      if (cdf_at(left, p.value) + 1e-12 < cdf_at(right, p.value)) return false;
  return true;
}

struct SweepRow {
  double snr_db = 0.0;
  Scheme scheme = Scheme::Isac;
  double ber = 0.0;
  double throughput_mbps = 0.0;
  double oh_fraction = 0.0;
  double angle_rmse = 0.0;
  double snr_rx_db = 0.0;  // mean receive SNR over slots and trials
};

inline SweepRow aggregate(std::span<const TrialResult> results, const SimConfig& cfg, double snr_db, Scheme scheme) {
  SweepRow row;
  row.snr_db = snr_db;
  row.scheme = scheme;
  long errors = 0, bits = 0;
  double angle_acc = 0.0, snr_acc = 0.0;
  std::size_t slots = 0;
  for (const auto& r : results) {
    errors += r.summary.bit_errors;
    bits += r.summary.bits;
    angle_acc += r.summary.angle_rmse;
    for (const auto& s : r.records) {
      snr_acc += s.snr_rx_db;
      ++slots;
    }
  }
  row.ber = bits ? static_cast<double>(errors) / static_cast<double>(bits) : 0.0;
  row.oh_fraction = results.front().summary.oh_fraction;
  row.angle_rmse = angle_acc / static_cast<double>(results.size());
  row.snr_rx_db = slots ? snr_acc / static_cast<double>(slots) : 0.0;
  ThroughputParams tp;
  tp.carriers = cfg.carriers;
  tp.layers = cfg.layers;
  tp.modulation_order = cfg.modulation_order;
  tp.n_prb = cfg.n_prb;
  tp.symbol_duration = cfg.numerology().symbol_duration;
  tp.overhead = row.oh_fraction;
  tp.ber = std::min(row.ber, 1.0 - row.oh_fraction);
  row.throughput_mbps = throughput(tp);
  return row;
}

/// Per SNR and scheme: trial-averaged BER and the throughput it implies.
inline std::vector<SweepRow> sweep_snr(const SimConfig& cfg, std::span<const double> snr_list_db, int trials) {
  if (snr_list_db.empty()) throw ConfigError("sweep_snr: empty SNR list");
  std::vector<SweepRow> rows;
  for (double snr : snr_list_db) {
    SimConfig c = cfg;
    c.transmit_snr_db = snr;
    for (Scheme s : {Scheme::Isac, Scheme::Codebook}) {
      const auto results = run_trials(c, s, trials);
      rows.push_back(aggregate(results, c, snr, s));
    }
  }
  return rows;
}

}  // namespace isac
