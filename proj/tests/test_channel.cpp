#include "isac/channel.hpp"

#include <gtest/gtest.h>

using namespace isac;

namespace {

ResourceGrid random_grid(int n_prb, int l, Rng& rng) {
  return build_grid(n_prb, l, random_payload(static_cast<std::size_t>(12 * n_prb * l), 4, rng), numerology_params(3));
}

TargetParams target(double az, double el, double d, double v_rad, cd beta) {
  TargetParams t;
  t.azimuth = az;
  t.elevation = el;
  t.distance = d;
  t.radial_velocity = v_rad;
  t.reflection = beta;
  t.delay = 2.0 * d / kSpeedOfLight;
  t.doppler = 2.0 * v_rad * 35e9 / kSpeedOfLight;
  return t;
}

}  // namespace

TEST(Rng, ComplexGaussianVarianceCalibrated) {
  Rng rng(2024);
  const int n = 1'000'000;
  for (double var : {0.01, 1.0, 3.5}) {
    double acc = 0.0, re = 0.0, im = 0.0;
    for (int i = 0; i < n; ++i) {
      const cd z = rng.complex_gaussian(var);
      acc += std::norm(z);
      re += z.real() * z.real();
      im += z.imag() * z.imag();
    }
    EXPECT_NEAR(acc / n / var, 1.0, 0.01);
    EXPECT_NEAR(re / im, 1.0, 0.02);
  }
}

TEST(Rng, SubstreamsAreIndependentAndReproducible) {
  Rng a(7, 0, Stream::CommNoise), b(7, 0, Stream::CommNoise), c(7, 0, Stream::RadarNoise), d(7, 1, Stream::CommNoise);
  const auto x = a.next_u64();
  EXPECT_EQ(x, b.next_u64());
  EXPECT_NE(x, c.next_u64());
  EXPECT_NE(x, d.next_u64());
}

TEST(Echo, TrivialTargetGivesConstantGrid) {
  const UpaConfig tx{4, 4}, rx{4, 2};
  ResourceGrid g{CMat::Ones(24, 14), numerology_params(3)};
  TargetParams t = target(0.3, -0.1, 0.0, 0.0, cd{0.2, -0.1});
  t.delay = 0.0;
  t.doppler = 0.0;
  const auto f = conjugate_beamformer(tx, 0.25, -0.1);
  const auto snr = SnrSpec::from_db(10.0);
  const auto echo = synthesize_echo(g, std::vector{t}, f, tx, rx, snr);
  const CVec b = steering_vector(rx, t.azimuth, t.elevation).weights();
  const cd afh = tx_response(tx, f, t.azimuth, t.elevation);
  for (int i = 0; i < rx.size(); ++i) {
    const cd want = std::sqrt(16.0 * 8.0) * t.reflection * b(i) * afh;
    EXPECT_LT((echo.data[static_cast<std::size_t>(i)].array() - want).abs().maxCoeff(), 1e-14);
  }
}

TEST(Echo, MatchesElementwiseModel) {
  Rng rng(4);
  const UpaConfig tx{4, 4}, rx{4, 4};
  const auto g = random_grid(2, 14, rng);
  const std::vector<TargetParams> ts{target(0.9, -0.05, 40.0, 7.0, cd{1e-2, 3e-3}),
                                     target(-0.3, 0.1, 55.0, 0.0, cd{-4e-3, 1e-3})};
  const auto f = conjugate_beamformer(tx, 0.8, -0.05);
  const auto snr = SnrSpec{5.0, 2.0};
  const long first = 28;
  const auto echo = synthesize_echo(g, ts, f, tx, rx, snr, nullptr, first);
  const double ts_sym = g.numerology.symbol_duration, df = g.numerology.scs;
  for (int i = 0; i < rx.size(); ++i)
    for (int m = 0; m < 24; ++m)
      for (int l = 0; l < 14; ++l) {
        cd want{};
        for (const auto& t : ts) {
          const cd b = steering_vector(rx, t.azimuth, t.elevation).weights()(i);
          want += std::sqrt(16.0 * 16.0) * std::sqrt(2.0) * t.reflection * b *
                  tx_response(tx, f, t.azimuth, t.elevation) * g.symbols(m, l) *
                  std::exp(cd{0, 2 * kPi * t.doppler * (first + l) * ts_sym}) * std::exp(cd{0, -2 * kPi * m * df * t.delay});
        }
        EXPECT_NEAR(std::abs(echo.data[static_cast<std::size_t>(i)](m, l) - want), 0.0, 1e-14);
      }
}

TEST(Echo, ConsecutiveSlotsArePhaseContinuous) {
  Rng rng(8);
  const UpaConfig tx{2, 2}, rx{2, 2};
  const auto g = random_grid(1, 28, rng);
  ResourceGrid first{g.symbols.leftCols(14), g.numerology}, second{g.symbols.rightCols(14), g.numerology};
  const std::vector<TargetParams> ts{target(0.2, 0.0, 30.0, 15.0, cd{1.0, 0.0})};
  const auto f = conjugate_beamformer(tx, 0.2, 0.0);
  const auto snr = SnrSpec::from_db(0.0);
  const auto whole = synthesize_echo(g, ts, f, tx, rx, snr);
  const auto b = synthesize_echo(second, ts, f, tx, rx, snr, nullptr, 14);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_LT((whole.data[i].rightCols(14) - b.data[i]).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Echo, NoiseVariancePerAntennaAndRe) {
  const UpaConfig tx{2, 2}, rx{8, 8};
  ResourceGrid g{CMat::Ones(600, 28), numerology_params(3)};
  const std::vector<TargetParams> ts{target(0.0, 0.0, 10.0, 0.0, cd{})};
  const auto snr = SnrSpec::from_db(7.0);
  Rng rng(77);
  const auto echo = synthesize_echo(g, ts, conjugate_beamformer(tx, 0, 0), tx, rx, snr, &rng);
  double acc = 0.0;
  std::size_t n = 0;
  for (const auto& a : echo.data) {
    acc += a.squaredNorm();
    n += static_cast<std::size_t>(a.size());
  }
  ASSERT_GE(n, 1'000'000u);
  EXPECT_NEAR(acc / static_cast<double>(n) / snr.noise_var(), 1.0, 0.01);
}

TEST(Echo, RejectsBadInput) {
  const UpaConfig tx{2, 2}, rx{2, 2};
  ResourceGrid g{CMat::Ones(12, 14), numerology_params(3)};
  const std::vector<TargetParams> none;
  EXPECT_THROW(synthesize_echo(g, none, conjugate_beamformer(tx, 0, 0), tx, rx, SnrSpec{}), ConfigError);
  const std::vector<TargetParams> one{target(0, 0, 10, 0, cd{1, 0})};
  EXPECT_THROW(synthesize_echo(g, one, conjugate_beamformer({4, 4}, 0, 0), tx, rx, SnrSpec{}), DimensionError);
}

TEST(Link, EffectiveGainMatchesExplicitSum) {
  const UpaConfig tx{8, 8}, rx{4, 4};
  std::vector<LinkPath> paths(2);
  paths[0].departure = target(0.6, -0.06, 47.0, 0, {});
  paths[0].arrival_azimuth = 0.6;
  paths[0].arrival_elevation = 0.06;
  paths[0].gain = std::polar(0.02, 1.1);
  paths[1].departure = target(0.2, 0.08, 60.0, 0, {});
  paths[1].arrival_azimuth = -0.4;
  paths[1].arrival_elevation = 0.1;
  paths[1].gain = std::polar(0.005, -2.0);
  const auto f = conjugate_beamformer(tx, 0.58, -0.05);
  const auto v = conjugate_beamformer(rx, 0.61, 0.05);
  cd want{};
  for (const auto& p : paths) {
    const CVec a = steering_vector(tx, p.departure.azimuth, p.departure.elevation).weights();
    const CVec u = steering_vector(rx, p.arrival_azimuth, p.arrival_elevation).weights();
    want += p.gain * v.weights().dot(u) * a.dot(f.weights());
  }
  want *= std::sqrt(64.0 * 16.0) * std::sqrt(3.0);
  EXPECT_NEAR(std::abs(effective_link_gain(paths, f, v, tx, rx, 3.0) - want), 0.0, 1e-14);
}

TEST(Link, AlignedLosReachesFullArrayGain) {
  const UpaConfig tx{8, 8}, rx{4, 4};
  LinkPath p;
  p.departure = target(0.6, -0.06, 47.0, 0, {});
  p.arrival_azimuth = 0.6;
  p.arrival_elevation = 0.06;
  p.gain = std::polar(0.02, 0.3);
  const auto g = effective_link_gain(std::vector{p}, conjugate_beamformer(tx, 0.6, -0.06),
                                     conjugate_beamformer(rx, 0.6, 0.06), tx, rx);
  EXPECT_NEAR(std::abs(g), 32.0 * 0.02, 1e-12);
}

TEST(Link, NoiselessReceptionScalesGrid) {
  Rng rng(2);
  const UpaConfig tx{2, 2}, rx{2, 2};
  const auto grid = random_grid(1, 14, rng);
  LinkPath p;
  p.gain = {0.3, 0.4};
  const auto s = transmit_link(grid, std::vector{p}, conjugate_beamformer(tx, 0, 0), conjugate_beamformer(rx, 0, 0), tx,
                               rx, SnrSpec::from_db(10));
  EXPECT_LT((s.rx_symbols - grid.symbols * s.effective_gain).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(s.receive_snr(), std::norm(s.effective_gain) / 0.1, 1e-9);
}

TEST(Link, PathGainsFollowFreeSpaceLaw) {
  SceneGeometry geom;
  const VehicleState v;
  const std::vector<ScattererSpec> scene{
      ScattererSpec{},
      ScattererSpec{ScattererKind::NlosStatic, {45.0, 12.0, 8.0}, cd{40.0, 0.0}, -10.0, 0.7}};
  LinkBudget budget;
  budget.reference_gain = 2.0;
  budget.reference_distance = 1.5;
  const auto paths = path_gains_from_scene(scene, v, geom, budget);
  const double d = (vehicle_point(geom, v) - geom.bs_position).norm();
  EXPECT_NEAR(std::abs(paths[0].gain), 3.0 / d, 1e-12);
  EXPECT_NEAR(std::abs(paths[1].gain), 3.0 / d * std::pow(10.0, -0.5), 1e-12);
  EXPECT_NEAR(paths[0].arrival_azimuth, paths[0].departure.azimuth, 1e-12);
}
