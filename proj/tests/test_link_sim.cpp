#include "isac/link_sim.hpp"
#include "isac/report.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace isac;

namespace {

SimConfig small_config() {
  SimConfig c;
  c.n_prb = 3;
  c.radar_rx = {4, 4};
  c.t_max = 40 * c.slot_duration;
  c.trials = 2;
  c.threads = 1;
  return c;
}

std::string csv_of(const TrialResult& r) {
  std::ostringstream os;
  write_slot_csv(os, r);
  return os.str();
}

}  // namespace

TEST(SlotLayouts, DataCountsFollowLedger) {
  const SimConfig c = small_config();
  for (auto s : {Scheme::Isac, Scheme::Codebook}) {
    const auto l = SlotLayouts::make(c.frame_for(s), c.n_prb);
    long data = 0;
    for (long d : l.data_re) data += d;
    EXPECT_EQ(data, l.ledger.data_re * c.n_prb);
  }
}

TEST(SlotWaveform, PilotsOnReferenceRes) {
  const SimConfig c = small_config();
  const auto l = SlotLayouts::make(c.frame_for(Scheme::Codebook), c.n_prb);
  Rng a(1), b(2);
  const auto w = make_slot_waveform(l.types[0], l.data[0], l.data_re[0], c.n_prb, 4, c.numerology(), a, b);
  for (int k = 0; k < l.types[0].rows(); ++k)
    for (int j = 0; j < 14; ++j) {
      const auto t = l.types[0](k, j);
      if (t == ReType::Dmrs || t == ReType::Csirs) {
        EXPECT_NEAR(std::abs(w.grid.symbols(k, j)), 1.0, 1e-12);
      }
    }
  const auto u = make_slot_waveform(l.types[4], l.data[4], l.data_re[4], c.n_prb, 4, c.numerology(), a, b);
  EXPECT_EQ(u.payload.bits.size(), 0u);  // uplink slot
  EXPECT_EQ(u.grid.symbols.cwiseAbs().maxCoeff(), 0.0);
}

TEST(BitErrors, NoiselessLinkIsErrorFree) {
  const SimConfig c = small_config();
  const auto l = SlotLayouts::make(c.frame_for(Scheme::Isac), c.n_prb);
  Rng a(1), b(2);
  const auto w = make_slot_waveform(l.types[1], l.data[1], l.data_re[1], c.n_prb, 4, c.numerology(), a, b);
  LinkSample s;
  s.effective_gain = {0.3, -2.0};
  s.noise_var = 1.0;
  s.rx_symbols = w.grid.symbols * s.effective_gain;
  EXPECT_EQ(count_bit_errors(s, l.data[1], w.payload), 0);
  s.rx_symbols = -s.rx_symbols;  // every sign bit flips
  EXPECT_GE(count_bit_errors(s, l.data[1], w.payload), static_cast<long>(w.payload.bits.size() / 2));
}

TEST(BeamSearch, PicksBestPairForLosOnlyScene) {
  SimConfig c = small_config();
  c.scatterers.resize(1);
  const auto search = BeamSearch::make(c);
  const auto paths = path_gains_from_scene(c.scatterers, c.initial, c.geom, c.link);
  const auto [t, r] = search.best_pair(paths, c);
  double best = 0.0;
  for (std::size_t i = 0; i < search.tx_cb.beams.size(); ++i)
    for (std::size_t j = 0; j < search.rx_cb.beams.size(); ++j)
      best = std::max(best, std::abs(effective_link_gain(paths, search.tx_cb.beams[i].beam, search.rx_cb.beams[j].beam,
                                                         c.tx, c.vehicle)));
  const double got =
      std::abs(effective_link_gain(paths, search.tx_cb.beams[t].beam, search.rx_cb.beams[r].beam, c.tx, c.vehicle));
  EXPECT_GE(got, best - 1e-12);
}

TEST(IsacTrial, DeterministicForFixedSeed) {
  const SimConfig c = small_config();
  const auto a = run_isac_trial(c, 1);
  const auto b = run_isac_trial(c, 1);
  EXPECT_EQ(csv_of(a), csv_of(b));
  const auto other = run_isac_trial(c, 0);
  EXPECT_NE(csv_of(a), csv_of(other));
}

TEST(IsacTrial, ThreadCountDoesNotChangeResults) {
  SimConfig c = small_config();
  c.trials = 3;
  const auto serial = run_trials(c, Scheme::Isac, 3);
  c.threads = 3;
  const auto parallel = run_trials(c, Scheme::Isac, 3);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(parallel[i].trial, i);
    EXPECT_EQ(csv_of(serial[i]), csv_of(parallel[i]));
  }
}

TEST(IsacTrial, TracksVehicle) {
  const SimConfig c = small_config();
  const auto r = run_isac_trial(c, 0);
  ASSERT_EQ(r.records.size(), c.slot_count());
  for (const auto& s : r.records) {
    EXPECT_FALSE(std::isnan(s.theta_est));
    EXPECT_LT(std::abs(s.theta_est - s.theta_true), 0.1);
    EXPECT_LT(std::abs(s.d_est - s.d_true), 10.0);
  }
  EXPECT_LT(r.summary.angle_rmse, r.summary.meas_angle_rmse);
  EXPECT_NEAR(r.summary.oh_fraction, 42.0 / 840.0, 1e-15);
}

TEST(CodebookTrial, BeamFixedBetweenReports) {
  const SimConfig c = small_config();
  const auto r = run_codebook_trial(c, 0);
  for (std::size_t n = 1; n < r.records.size(); ++n)
    if (n % 5 != 0) {
      EXPECT_EQ(r.records[n].beam_tx, r.records[n - 1].beam_tx);
    }
  EXPECT_TRUE(std::isnan(r.records[3].d_est));
  EXPECT_NEAR(r.summary.oh_fraction, 74.0 / 624.0, 1e-15);
}

TEST(Summary, HighSnrMeansErrorFreeAndFormulaThroughput) {
  SimConfig c = small_config();
  c.transmit_snr_db = 40.0;
  for (auto s : {Scheme::Isac, Scheme::Codebook}) {
    const auto r = run_trial(c, s, 0);
    EXPECT_EQ(r.summary.bit_errors, 0);
    ThroughputParams p;
    p.n_prb = c.n_prb;
    p.symbol_duration = c.numerology().symbol_duration;
    p.overhead = r.summary.oh_fraction;
    EXPECT_NEAR(r.summary.throughput_mbps, throughput(p), 1e-9);
  }
}

TEST(Cdf, EmpiricalCdfProperties) {
  const auto cdf = empirical_cdf({0.3, 0.1, 0.2, 0.2, std::numeric_limits<double>::quiet_NaN()});
  ASSERT_EQ(cdf.size(), 3u);
  EXPECT_DOUBLE_EQ(cdf[0].value, 0.1);
  EXPECT_DOUBLE_EQ(cdf[1].probability, 0.75);
  EXPECT_DOUBLE_EQ(cdf.back().probability, 1.0);
  EXPECT_DOUBLE_EQ(cdf_at(cdf, 0.05), 0.0);
  EXPECT_DOUBLE_EQ(cdf_at(cdf, 0.25), 0.75);
  const auto shifted = empirical_cdf({0.4, 0.2, 0.3, 0.3});
  EXPECT_TRUE(stochastically_dominates(cdf, shifted));
  EXPECT_FALSE(stochastically_dominates(shifted, cdf));
}

TEST(Report, CsvRoundTripAndFixedFormat) {
  const SimConfig c = small_config();
  const auto r = run_codebook_trial(c, 0);
  const std::string text = csv_of(r);
  std::istringstream is(text);
  const auto back = read_slot_csv(is, "x.csv");
  ASSERT_EQ(back.size(), r.records.size());
  EXPECT_EQ(back[7].bits, r.records[7].bits);
  EXPECT_NEAR(back[7].theta_true, r.records[7].theta_true, 1e-9);
  EXPECT_TRUE(std::isnan(back[7].d_est));
  EXPECT_EQ(fmt(-0.0000000001), "0.000000000");
  EXPECT_EQ(fmt(1.5, 2), "1.50");
}

TEST(Report, MalformedCsvNamesLine) {
  std::istringstream is(std::string(kSlotCsvHeader) + "\n0,1,2\n");
  try {
    read_slot_csv(is, "bad.csv");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.csv: line 2"), std::string::npos);
  }
}

TEST(Report, SummaryJsonFields) {
  const SimConfig c = small_config();
  const auto results = run_trials(c, Scheme::Codebook, 2);
  const auto j = summary_json(c, Scheme::Codebook, results);
  EXPECT_EQ(j["schema_version"], kSummarySchemaVersion);
  EXPECT_EQ(j["seed"], c.seed);
  EXPECT_NEAR(j["reduction_fraction"].get<double>(), 32.0 / 74.0, 1e-9);
  for (const char* k : {"angle_rmse_rad", "distance_rmse_m", "ber", "throughput_mbps", "oh_fraction", "config"})
    EXPECT_TRUE(j.contains(k)) << k;
}

TEST(Report, LedgerReportShowsReduction) {
  EXPECT_NE(ledger_report(SimConfig{}).find("43.24 %"), std::string::npos);
}
