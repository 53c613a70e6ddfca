#pragma once

// Simulator configuration and its JSON representation. Every field has a
// default; a config file only needs the keys it overrides. Unknown keys are
// rejected with their dotted path.

#include "isac/array.hpp"
#include "isac/channel.hpp"
#include "isac/nr_frame.hpp"
#include "isac/radar_est.hpp"
#include "isac/scenario.hpp"
#include "isac/tracker.hpp"
#include "isac/waveform.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace isac {

enum class Scheme { Isac, Codebook };

inline const char* to_string(Scheme s) { return s == Scheme::Isac ? "isac" : "codebook"; }

inline Scheme scheme_from_string(const std::string& s) {
  if (s == "isac") return Scheme::Isac;
  if (s == "codebook") return Scheme::Codebook;
  throw ConfigError("unknown scheme '" + s + "' (expected isac or codebook)");
}

enum class MeasurementNoiseMode { Fixed, SnrScaled };

struct RadarSettings {
  int pad_m = 4;
  int pad_l = 4;
  double music_grid_step = 0.1 * kPi / 180.0;
  int cpi_slots = 1;
  int peak_guard = 1;
  double init_mse_scale = 10.0;
};

struct SimConfig {
  // scene
  SceneGeometry geom{};
  VehicleState initial{};
  std::vector<ScattererSpec> scatterers{
      ScattererSpec{ScattererKind::LosVehicle, Eigen::Vector3d::Zero(), cd{100.0, 0.0}, 0.0, 0.0},
      ScattererSpec{ScattererKind::NlosStatic, Eigen::Vector3d{45.0, 12.0, 8.0}, cd{40.0, 0.0}, -10.0, 0.7},
      ScattererSpec{ScattererKind::NlosStatic, Eigen::Vector3d{38.0, -30.0, 6.0}, cd{30.0, 0.0}, -13.0, 2.1},
  };
  LinkBudget link{};

  // arrays
  UpaConfig tx{8, 8};
  UpaConfig radar_rx{8, 8};
  UpaConfig vehicle{4, 4};
  int tx_codebook_o_az = 4;
  int tx_codebook_o_el = 4;
  int vehicle_codebook_o_az = 4;
  int vehicle_codebook_o_el = 4;

  // waveform
  int mu = 3;
  int n_prb = 52;
  int modulation_order = 4;
  int layers = 1;
  int carriers = 1;

  // frame (mode is chosen per scheme)
  FrameConfig frame{};

  // noise
  double transmit_snr_db = 10.0;
  std::vector<double> snr_sweep_db{-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0};
  ProcessNoise process = ProcessNoise::from_sigmas(1e-3, 1e-3, 1e-3, 1e-4);
  MeasurementNoise measurement{};
  MeasurementNoiseMode measurement_mode = MeasurementNoiseMode::Fixed;
  double snr_reference_db = 10.0;

  RadarSettings radar{};

  // run
  double t_max = 4.0;
  double slot_duration = 0.125e-3;
  int trials = 1;
  std::uint64_t seed = 1;
  Scheme scheme = Scheme::Isac;
  int threads = 0;  // 0: hardware concurrency

  Numerology numerology() const { return numerology_params(mu); }

  FrameConfig frame_for(Scheme s) const {
    FrameConfig f = frame;
    f.numerology = numerology();
    f.mode = s == Scheme::Isac ? FrameMode::Isac : FrameMode::Conventional;
    return f;
  }

  std::size_t slot_count() const { return static_cast<std::size_t>(std::floor(t_max / slot_duration + 1e-9)) + 1; }

  void validate() const;
};

inline void SimConfig::validate() const {
  geom.validate();
  tx.validate();
  radar_rx.validate();
  vehicle.validate();
  process.validate();
  measurement.validate();
  frame_for(Scheme::Isac).validate();
  if (initial.speed < 0.0) throw ConfigError("scene.vehicle_speed must be >= 0");
  if (!(link.carrier_hz > 0.0) || !(link.reference_distance > 0.0) || !(link.reference_gain > 0.0))
    throw ConfigError("link: carrier, reference gain and reference distance must be positive");
  if (!supported_order(modulation_order)) throw ConfigError("waveform.modulation_order must be 2, 4 or 6");
  if (n_prb < 1 || layers < 1 || carriers < 1) throw ConfigError("waveform: n_prb, layers and carriers must be >= 1");
  if (tx_codebook_o_az < 1 || tx_codebook_o_el < 1 || vehicle_codebook_o_az < 1 || vehicle_codebook_o_el < 1)
    throw ConfigError("arrays: codebook oversampling must be >= 1");
  const Numerology num = numerology_params(mu);
  if (std::abs(slot_duration - num.slot_duration()) > 1e-9 * num.slot_duration() + 1e-12)
    throw ConfigError("run.slot_s must equal the numerology slot duration (" + std::to_string(num.slot_duration()) + " s)");
  if (t_max < 0.0) throw ConfigError("run.t_max_s must be >= 0");
  const double ratio = t_max / slot_duration;
  if (std::abs(ratio - std::round(ratio)) > 1e-6) throw ConfigError("run.t_max_s must be an integer number of slots");
  if (trials < 1) throw ConfigError("run.trials must be >= 1");
  if (radar.pad_m < 1 || radar.pad_l < 1 || radar.cpi_slots < 1 || radar.peak_guard < 0)
    throw ConfigError("radar: pad factors and cpi_slots must be >= 1, peak_guard >= 0");
  if (!(radar.music_grid_step > 0.0)) throw ConfigError("radar.music_grid_step_deg must be positive");
  if (radar.init_mse_scale < 0.0) throw ConfigError("radar.init_mse_scale must be >= 0");

  int vehicles = 0;
  for (const auto& s : scatterers) {
    if (s.kind == ScattererKind::LosVehicle) ++vehicles;
    if (!(std::abs(s.rcs) > 0.0)) throw ConfigError("scene.scatterers: rcs must be nonzero");
  }
  if (vehicles != 1) throw ConfigError("scene.scatterers: exactly one los_vehicle entry is required");
  if (static_cast<int>(scatterers.size()) >= radar_rx.size())
    throw ConfigError("scene.scatterers: model order must stay below the radar receive antenna count");

  // Echo delays must stay inside the cyclic prefix over the whole run.
  const auto first = initial;
  auto last = initial;
  last.position += initial.speed * t_max * geom.road_axis;
  for (const auto& s : scatterers)
    for (const auto& v : {first, last}) {
      const TargetParams t = observe(geom, v, s, link.carrier_hz);
      if (t.delay >= num.cp_duration)
        throw ConfigError("scene: echo delay " + std::to_string(t.delay * 1e9) + " ns exceeds the cyclic prefix (" +
                          std::to_string(num.cp_duration * 1e9) + " ns)");
    }
}

// ---------------------------------------------------------------------------
// JSON

using nlohmann::json;

namespace detail {

inline json vec_json(const Eigen::VectorXd& v) {
  json j = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

inline json scatterer_json(const ScattererSpec& s) {
  json j;
  j["kind"] = s.kind == ScattererKind::LosVehicle ? "los_vehicle" : "nlos_static";
  if (s.kind == ScattererKind::NlosStatic) j["position"] = vec_json(s.position);
  j["rcs"] = {s.rcs.real(), s.rcs.imag()};
  j["relative_power_db"] = s.relative_power_db;
  j["phase_rad"] = s.phase_rad;
  return j;
}

// Reports any key of `user` that is absent from `reference`, recursively.
inline void check_keys(const json& user, const json& reference, const std::string& path) {
  if (!user.is_object()) return;
  for (const auto& [key, value] : user.items()) {
    const std::string here = path.empty() ? key : path + "." + key;
    if (!reference.contains(key)) throw ConfigError("unknown config key '" + here + "'");
    if (key == "scatterers") continue;  // array of objects, checked separately
    if (value.is_object()) {
      if (!reference.at(key).is_object()) throw ConfigError("config key '" + here + "' must not be an object");
      check_keys(value, reference.at(key), here);
    }
  }
}

template <typename T>
T get(const json& j, const char* key, const std::string& path) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config field '" + path + "." + key + "': " + e.what());
  }
}

inline Eigen::VectorXd get_vec(const json& j, const char* key, const std::string& path, Eigen::Index n) {
  const auto v = get<std::vector<double>>(j, key, path);
  if (static_cast<Eigen::Index>(v.size()) != n)
    throw ConfigError("config field '" + path + "." + key + "' must have " + std::to_string(n) + " entries");
  return Eigen::Map<const Eigen::VectorXd>(v.data(), n);
}

inline std::size_t line_of(const std::string& text, std::size_t byte) {
  const auto end = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(end), '\n'));
}

}  // namespace detail

inline json to_json(const SimConfig& c) {
  json j;
  j["scene"]["bs_position"] = detail::vec_json(c.geom.bs_position);
  j["scene"]["road_axis"] = detail::vec_json(c.geom.road_axis);
  j["scene"]["vehicle_height"] = c.geom.vehicle_height;
  j["scene"]["vehicle_start"] = detail::vec_json(c.initial.position);
  j["scene"]["vehicle_speed"] = c.initial.speed;
  j["scene"]["scatterers"] = json::array();
  for (const auto& s : c.scatterers) j["scene"]["scatterers"].push_back(detail::scatterer_json(s));

  j["link"]["carrier_hz"] = c.link.carrier_hz;
  j["link"]["reference_gain"] = c.link.reference_gain;
  j["link"]["reference_distance_m"] = c.link.reference_distance;

  j["arrays"]["tx"] = {c.tx.nx, c.tx.ny};
  j["arrays"]["radar_rx"] = {c.radar_rx.nx, c.radar_rx.ny};
  j["arrays"]["vehicle"] = {c.vehicle.nx, c.vehicle.ny};
  j["arrays"]["tx_codebook_oversampling"] = {c.tx_codebook_o_az, c.tx_codebook_o_el};
  j["arrays"]["vehicle_codebook_oversampling"] = {c.vehicle_codebook_o_az, c.vehicle_codebook_o_el};

  j["waveform"]["mu"] = c.mu;
  j["waveform"]["n_prb"] = c.n_prb;
  j["waveform"]["modulation_order"] = c.modulation_order;
  j["waveform"]["layers"] = c.layers;
  j["waveform"]["carriers"] = c.carriers;

  j["frame"]["pattern"] = c.frame.pattern;
  j["frame"]["dmrs_re_per_period"] = c.frame.dmrs_re_per_period;
  j["frame"]["csirs_re_per_period"] = c.frame.csirs_re_per_period;
  j["frame"]["csirs_period_slots"] = c.frame.csirs_period_slots;
  j["frame"]["special_split"] = {c.frame.special.dl_symbols, c.frame.special.guard_symbols, c.frame.special.ul_symbols};

  j["noise"]["transmit_snr_db"] = c.transmit_snr_db;
  j["noise"]["snr_sweep_db"] = c.snr_sweep_db;
  j["noise"]["process_sigmas"] = detail::vec_json(c.process.q.cwiseSqrt());
  j["noise"]["measurement_sigmas"] = {c.measurement.sigma_theta, c.measurement.sigma_d, c.measurement.sigma_v,
                                      c.measurement.sigma_beta};
  j["noise"]["measurement_mode"] = c.measurement_mode == MeasurementNoiseMode::Fixed ? "fixed" : "snr_scaled";
  j["noise"]["snr_reference_db"] = c.snr_reference_db;
  j["noise"]["cos_floor"] = c.measurement.cos_floor;

  j["radar"]["pad_m"] = c.radar.pad_m;
  j["radar"]["pad_l"] = c.radar.pad_l;
  j["radar"]["music_grid_step_deg"] = c.radar.music_grid_step * 180.0 / kPi;
  j["radar"]["cpi_slots"] = c.radar.cpi_slots;
  j["radar"]["peak_guard"] = c.radar.peak_guard;
  j["radar"]["init_mse_scale"] = c.radar.init_mse_scale;

  j["run"]["t_max_s"] = c.t_max;
  j["run"]["slot_s"] = c.slot_duration;
  j["run"]["trials"] = c.trials;
  j["run"]["seed"] = c.seed;
  j["run"]["scheme"] = to_string(c.scheme);
  j["run"]["threads"] = c.threads;
  return j;
}

inline ScattererSpec scatterer_from_json(const json& j, const std::string& path) {
  static const json allowed = {{"kind", 0}, {"position", 0}, {"rcs", 0}, {"relative_power_db", 0}, {"phase_rad", 0}};
  if (!j.is_object()) throw ConfigError("config field '" + path + "' must be an object");
  detail::check_keys(j, allowed, path);
  ScattererSpec s;
  const auto kind = detail::get<std::string>(j, "kind", path);
  if (kind == "los_vehicle") {
    s.kind = ScattererKind::LosVehicle;
  } else if (kind == "nlos_static") {
    s.kind = ScattererKind::NlosStatic;
    s.position = detail::get_vec(j, "position", path, 3);
  } else {
    throw ConfigError("config field '" + path + ".kind': expected los_vehicle or nlos_static");
  }
  if (j.contains("rcs")) {
    const auto r = detail::get_vec(j, "rcs", path, 2);
    s.rcs = {r(0), r(1)};
  }
  if (j.contains("relative_power_db")) s.relative_power_db = detail::get<double>(j, "relative_power_db", path);
  if (j.contains("phase_rad")) s.phase_rad = detail::get<double>(j, "phase_rad", path);
  return s;
}

/// Overlays `user` on the defaults. Throws ConfigError naming the offending field.
inline SimConfig config_from_json(const json& user) {
  SimConfig c;
  json merged = to_json(c);
  detail::check_keys(user, merged, "");
  merged.merge_patch(user);
  const json& j = merged;

  const json& sc = j.at("scene");
  c.geom.bs_position = detail::get_vec(sc, "bs_position", "scene", 3);
  c.geom.road_axis = detail::get_vec(sc, "road_axis", "scene", 2);
  c.geom.vehicle_height = detail::get<double>(sc, "vehicle_height", "scene");
  c.initial.position = detail::get_vec(sc, "vehicle_start", "scene", 2);
  c.initial.speed = detail::get<double>(sc, "vehicle_speed", "scene");
  c.scatterers.clear();
  if (!sc.at("scatterers").is_array()) throw ConfigError("config field 'scene.scatterers' must be an array");
  for (std::size_t i = 0; i < sc.at("scatterers").size(); ++i)
    c.scatterers.push_back(scatterer_from_json(sc.at("scatterers")[i], "scene.scatterers[" + std::to_string(i) + "]"));

  const json& ln = j.at("link");
  c.link.carrier_hz = detail::get<double>(ln, "carrier_hz", "link");
  c.link.reference_gain = detail::get<double>(ln, "reference_gain", "link");
  c.link.reference_distance = detail::get<double>(ln, "reference_distance_m", "link");

  const json& ar = j.at("arrays");
  auto upa = [&](const char* key) {
    const auto v = detail::get<std::vector<int>>(ar, key, "arrays");
    if (v.size() != 2) throw ConfigError(std::string("config field 'arrays.") + key + "' must have 2 entries");
    return std::pair{v[0], v[1]};
  };
  std::tie(c.tx.nx, c.tx.ny) = upa("tx");
  std::tie(c.radar_rx.nx, c.radar_rx.ny) = upa("radar_rx");
  std::tie(c.vehicle.nx, c.vehicle.ny) = upa("vehicle");
  std::tie(c.tx_codebook_o_az, c.tx_codebook_o_el) = upa("tx_codebook_oversampling");
  std::tie(c.vehicle_codebook_o_az, c.vehicle_codebook_o_el) = upa("vehicle_codebook_oversampling");

  const json& wf = j.at("waveform");
  c.mu = detail::get<int>(wf, "mu", "waveform");
  c.n_prb = detail::get<int>(wf, "n_prb", "waveform");
  c.modulation_order = detail::get<int>(wf, "modulation_order", "waveform");
  c.layers = detail::get<int>(wf, "layers", "waveform");
  c.carriers = detail::get<int>(wf, "carriers", "waveform");

  const json& fr = j.at("frame");
  c.frame.pattern = detail::get<std::string>(fr, "pattern", "frame");
  c.frame.dmrs_re_per_period = detail::get<int>(fr, "dmrs_re_per_period", "frame");
  c.frame.csirs_re_per_period = detail::get<int>(fr, "csirs_re_per_period", "frame");
  c.frame.csirs_period_slots = detail::get<int>(fr, "csirs_period_slots", "frame");
  const auto split = detail::get<std::vector<int>>(fr, "special_split", "frame");
  if (split.size() != 3) throw ConfigError("config field 'frame.special_split' must have 3 entries");
  c.frame.special = {split[0], split[1], split[2]};

  const json& nz = j.at("noise");
  c.transmit_snr_db = detail::get<double>(nz, "transmit_snr_db", "noise");
  c.snr_sweep_db = detail::get<std::vector<double>>(nz, "snr_sweep_db", "noise");
  const Eigen::VectorXd ps = detail::get_vec(nz, "process_sigmas", "noise", 4);
  c.process = ProcessNoise::from_sigmas(ps(0), ps(1), ps(2), ps(3));
  const Eigen::VectorXd ms = detail::get_vec(nz, "measurement_sigmas", "noise", 4);
  c.measurement.sigma_theta = ms(0);
  c.measurement.sigma_d = ms(1);
  c.measurement.sigma_v = ms(2);
  c.measurement.sigma_beta = ms(3);
  const auto mode = detail::get<std::string>(nz, "measurement_mode", "noise");
  if (mode == "fixed") {
    c.measurement_mode = MeasurementNoiseMode::Fixed;
  } else if (mode == "snr_scaled") {
    c.measurement_mode = MeasurementNoiseMode::SnrScaled;
  } else {
    throw ConfigError("config field 'noise.measurement_mode': expected fixed or snr_scaled");
  }
  c.snr_reference_db = detail::get<double>(nz, "snr_reference_db", "noise");
  c.measurement.cos_floor = detail::get<double>(nz, "cos_floor", "noise");

  const json& rd = j.at("radar");
  c.radar.pad_m = detail::get<int>(rd, "pad_m", "radar");
  c.radar.pad_l = detail::get<int>(rd, "pad_l", "radar");
  c.radar.music_grid_step = detail::get<double>(rd, "music_grid_step_deg", "radar") * kPi / 180.0;
  c.radar.cpi_slots = detail::get<int>(rd, "cpi_slots", "radar");
  c.radar.peak_guard = detail::get<int>(rd, "peak_guard", "radar");
  c.radar.init_mse_scale = detail::get<double>(rd, "init_mse_scale", "radar");

  const json& rn = j.at("run");
  c.t_max = detail::get<double>(rn, "t_max_s", "run");
  c.slot_duration = detail::get<double>(rn, "slot_s", "run");
  c.trials = detail::get<int>(rn, "trials", "run");
  c.seed = detail::get<std::uint64_t>(rn, "seed", "run");
  c.scheme = scheme_from_string(detail::get<std::string>(rn, "scheme", "run"));
  c.threads = detail::get<int>(rn, "threads", "run");

  c.validate();
  return c;
}

inline SimConfig parse_config(const std::string& text, const std::string& source = "<config>") {
  json user;
  try {
    user = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ":" + std::to_string(detail::line_of(text, e.byte)) + ": " + e.what());
  }
  if (!user.is_object()) throw ConfigError(source + ": top level must be an object");
  try {
    return config_from_json(user);
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  } catch (const json::exception& e) {
    throw ConfigError(source + ": " + e.what());
  }
}

inline SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

}  // namespace isac
