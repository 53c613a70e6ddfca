#pragma once

// Text output for runs, sweeps and CDFs. Numbers use fixed precision so that
// reruns with the same seed are byte-identical.

#include "isac/config.hpp"
#include "isac/link_sim.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace isac {

inline constexpr int kSummarySchemaVersion = 1;

inline std::string fmt(double v, int decimals = 9) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s = buf;
  // -0.000 -> 0.000
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

inline const char* kSlotCsvHeader =
    "slot,t_s,theta_true_rad,d_true_m,v_true_mps,theta_meas_rad,d_meas_m,v_meas_mps,theta_est_rad,d_est_m,v_est_mps,"
    "beam_tx_rad,beam_rx_rad,snr_rx_db,bit_errors,bits,data_re";

inline void write_slot_csv(std::ostream& os, const TrialResult& r) {
  os << kSlotCsvHeader << '\n';
  for (const auto& s : r.records) {
    os << s.slot << ',' << fmt(s.time) << ',' << fmt(s.theta_true) << ',' << fmt(s.d_true) << ',' << fmt(s.v_true) << ','
       << fmt(s.theta_meas) << ',' << fmt(s.d_meas) << ',' << fmt(s.v_meas) << ',' << fmt(s.theta_est) << ','
       << fmt(s.d_est) << ',' << fmt(s.v_est) << ',' << fmt(s.beam_tx) << ',' << fmt(s.beam_rx) << ','
       << fmt(s.snr_rx_db, 6) << ',' << s.bit_errors << ',' << s.bits << ',' << s.data_re << '\n';
  }
}

/// Reads back a slot CSV written by write_slot_csv.
inline std::vector<SlotRecord> read_slot_csv(std::istream& is, const std::string& source) {
  std::string line;
  if (!std::getline(is, line) || line != kSlotCsvHeader)
    throw ConfigError(source + ": line 1: unexpected CSV header");
  std::vector<SlotRecord> out;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 17) throw ConfigError(source + ": line " + std::to_string(line_no) + ": expected 17 fields");
    auto num = [&](std::size_t i) {
      if (f[i] == "nan") return kNaN;
      try {
        std::size_t used = 0;
        const double v = std::stod(f[i], &used);
        if (used != f[i].size()) throw std::invalid_argument("trailing");
        return v;
      } catch (const std::exception&) {
        throw ConfigError(source + ": line " + std::to_string(line_no) + ": field " + std::to_string(i + 1) +
                          " is not a number: '" + f[i] + "'");
      }
    };
    SlotRecord s;
    s.slot = static_cast<std::size_t>(num(0));
    s.time = num(1);
    s.theta_true = num(2);
    s.d_true = num(3);
    s.v_true = num(4);
    s.theta_meas = num(5);
    s.d_meas = num(6);
    s.v_meas = num(7);
    s.theta_est = num(8);
    s.d_est = num(9);
    s.v_est = num(10);
    s.beam_tx = num(11);
    s.beam_rx = num(12);
    s.snr_rx_db = num(13);
    s.bit_errors = static_cast<long>(num(14));
    s.bits = static_cast<long>(num(15));
    s.data_re = static_cast<long>(num(16));
    out.push_back(s);
  }
  return out;
}

inline nlohmann::ordered_json summary_json(const SimConfig& cfg, Scheme scheme, std::span<const TrialResult> results) {
  using nlohmann::ordered_json;
  auto num = [](double v) { return std::isnan(v) ? ordered_json(nullptr) : ordered_json(std::stod(fmt(v))); };
  ordered_json trials = ordered_json::array();
  double angle = 0.0, dist = 0.0, beam = 0.0, meas = 0.0, thr = 0.0;
  long errors = 0, bits = 0;
  for (const auto& r : results) {
    const auto& s = r.summary;
    trials.push_back({{"trial", r.trial},
                      {"angle_rmse_rad", num(s.angle_rmse)},
                      {"distance_rmse_m", num(s.distance_rmse)},
                      {"beam_rmse_rad", num(s.beam_rmse)},
                      {"meas_angle_rmse_rad", num(s.meas_angle_rmse)},
                      {"bit_errors", s.bit_errors},
                      {"bits", s.bits},
                      {"ber", num(s.ber)},
                      {"throughput_mbps", num(s.throughput_mbps)}});
    angle += s.angle_rmse;
    dist += s.distance_rmse;
    beam += s.beam_rmse;
    meas += s.meas_angle_rmse;
    thr += s.throughput_mbps;
    errors += s.bit_errors;
    bits += s.bits;
  }
  const double n = static_cast<double>(results.size());
  const ReLedger own = build_ledger(cfg.frame_for(scheme));
  const ReLedger conv = build_ledger(cfg.frame_for(Scheme::Codebook));
  const ReLedger isac = build_ledger(cfg.frame_for(Scheme::Isac));

  ordered_json j;
  j["schema_version"] = kSummarySchemaVersion;
  j["scheme"] = to_string(scheme);
  j["seed"] = cfg.seed;
  j["trials"] = results.size();
  j["slots"] = results.empty() ? 0 : results.front().records.size();
  j["config"] = to_json(cfg);
  j["angle_rmse_rad"] = num(angle / n);
  j["distance_rmse_m"] = num(dist / n);
  j["beam_rmse_rad"] = num(beam / n);
  j["meas_angle_rmse_rad"] = num(meas / n);
  j["bit_errors"] = errors;
  j["bits"] = bits;
  j["ber"] = num(bits ? static_cast<double>(errors) / static_cast<double>(bits) : 0.0);
  j["throughput_mbps"] = num(thr / n);
  j["oh_fraction"] = num(overhead_fraction(own));
  j["reduction_fraction"] = num(overhead_reduction(conv, isac));
  j["per_trial"] = trials;
  return j;
}

inline void write_sweep_csv(std::ostream& os, std::span<const SweepRow> rows) {
  os << "snr_db,scheme,ber,throughput_mbps,oh_fraction,angle_rmse_rad,snr_rx_db\n";
  for (const auto& r : rows)
    os << fmt(r.snr_db, 3) << ',' << to_string(r.scheme) << ',' << fmt(r.ber) << ',' << fmt(r.throughput_mbps, 6) << ','
       << fmt(r.oh_fraction) << ',' << fmt(r.angle_rmse) << ',' << fmt(r.snr_rx_db, 6) << '\n';
}

inline void write_cdf_csv(std::ostream& os, std::span<const CdfPoint> cdf) {
  os << "error,probability\n";
  for (const auto& p : cdf) os << fmt(p.value) << ',' << fmt(p.probability) << '\n';
}

/// Human-readable RE ledger of both frame modes.
inline std::string ledger_report(const SimConfig& cfg) {
  const ReLedger conv = build_ledger(cfg.frame_for(Scheme::Codebook));
  const ReLedger isac = build_ledger(cfg.frame_for(Scheme::Isac));
  std::ostringstream os;
  auto block = [&](const char* name, const ReLedger& l) {
    os << name << '\n'
       << "  downlink_re   " << l.total_dl_re << '\n'
       << "  data_re       " << l.data_re << '\n'
       << "  dmrs_re       " << l.dmrs_re << '\n'
       << "  csirs_re      " << l.csirs_re << '\n'
       << "  guard_re      " << l.guard_re << '\n'
       << "  uplink_re     " << l.ul_re << '\n'
       << "  reference_re  " << l.reference_re() << '\n'
       << "  overhead      " << fmt(100.0 * overhead_fraction(l), 4) << " %\n";
  };
  os << "pattern " << cfg.frame.pattern << ", per RB per " << cfg.frame.csirs_period_slots << "-slot period\n";
  block("conventional", conv);
  block("isac", isac);
  os << "overhead_reduction " << fmt(100.0 * overhead_reduction(conv, isac), 2) << " %\n";
  return os.str();
}

}  // namespace isac
