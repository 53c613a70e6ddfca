#include "isac/waveform.hpp"

#include <gtest/gtest.h>

#include <bit>

using namespace isac;

TEST(Numerology, Mu3MatchesNrTable) {
  const auto n = numerology_params(3);
  EXPECT_DOUBLE_EQ(n.scs, 120e3);
  EXPECT_EQ(n.slots_per_subframe, 8);
  EXPECT_NEAR(n.symbol_duration, 8.929e-6, 1e-9);
  EXPECT_NEAR(n.slot_duration(), 0.125e-3, 1e-15);
  EXPECT_NEAR(n.useful_duration, 1.0 / 120e3, 1e-18);
  EXPECT_GT(n.cp_duration, 0.0);
}

TEST(Numerology, AllMuConsistent) {
  for (int mu = 0; mu <= 6; ++mu) {
    const auto n = numerology_params(mu);
    EXPECT_DOUBLE_EQ(n.scs, 15e3 * (1 << mu));
    EXPECT_NEAR(n.slot_duration() * n.slots_per_subframe, 1e-3, 1e-15);
  }
  EXPECT_THROW(numerology_params(-1), ConfigError);
  EXPECT_THROW(numerology_params(7), ConfigError);
}

// Square QAM per the NR modulation mapper, written out explicitly.
cd nr_qam(unsigned label, int q_m) {
  std::vector<int> b(q_m);
  for (int k = 0; k < q_m; ++k) b[k] = (label >> (q_m - 1 - k)) & 1U;
  auto s = [&](int i) { return 1.0 - 2.0 * b[i]; };
  switch (q_m) {
    case 2: return cd(s(0), s(1)) / std::sqrt(2.0);
    case 4: return cd(s(0) * (2 - s(2)), s(1) * (2 - s(3))) / std::sqrt(10.0);
    default: return cd(s(0) * (4 - s(2) * (2 - s(4))), s(1) * (4 - s(3) * (2 - s(5)))) / std::sqrt(42.0);
  }
}

class QamOrder : public ::testing::TestWithParam<int> {};

TEST_P(QamOrder, MatchesNrMapper) {
  const int q = GetParam();
  const auto pts = constellation(q);
  ASSERT_EQ(pts.size(), std::size_t{1} << q);
  for (unsigned v = 0; v < pts.size(); ++v) EXPECT_NEAR(std::abs(pts[v] - nr_qam(v, q)), 0.0, 1e-14) << v;
}

TEST_P(QamOrder, UnitAverageEnergy) {
  double e = 0.0;
  for (const auto& p : constellation(GetParam())) e += std::norm(p);
  EXPECT_NEAR(e / static_cast<double>(std::size_t{1} << GetParam()), 1.0, 1e-12);
}

TEST_P(QamOrder, NearestNeighboursDifferInOneBit) {
  const auto pts = constellation(GetParam());
  double dmin = 1e9;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) dmin = std::min(dmin, std::abs(pts[i] - pts[j]));
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      if (std::abs(pts[i] - pts[j]) < dmin + 1e-9) {
        EXPECT_EQ(std::popcount(i ^ j), 1);
      }
}

TEST_P(QamOrder, RoundTripWithSmallPerturbation) {
  const int q = GetParam();
  Rng rng(5);
  const auto payload = random_payload(4000, q, rng);
  auto syms = qam_modulate(payload);
  for (auto& s : syms) s += rng.complex_gaussian(1e-4);
  EXPECT_EQ(qam_demodulate(syms, q).bits, payload.bits);
}

INSTANTIATE_TEST_SUITE_P(Orders, QamOrder, ::testing::Values(2, 4, 6));

TEST(Qam, RejectsBadInput) {
  BitPayload p{{1, 0, 1}, 2};
  EXPECT_THROW(qam_modulate(p), DimensionError);
  p = BitPayload{{1, 0, 1}, 3};
  EXPECT_THROW(qam_modulate(p), ConfigError);
}

TEST(RandomPayload, DeterministicAndBalanced) {
  Rng a(9), b(9);
  const auto pa = random_payload(10000, 4, a);
  const auto pb = random_payload(10000, 4, b);
  EXPECT_EQ(pa.bits, pb.bits);
  double ones = 0;
  for (auto bit : pa.bits) ones += bit;
  EXPECT_NEAR(ones / pa.bits.size(), 0.5, 0.01);
}

TEST(BuildGrid, FillsColumnMajorOnMask) {
  const auto num = numerology_params(3);
  ReMask mask = ReMask::Constant(12, 2, true);
  mask(0, 0) = false;
  mask(5, 1) = false;
  BitPayload p;
  p.modulation_order = 2;
  for (int s = 0; s < 22; ++s) {
    p.bits.push_back(static_cast<std::uint8_t>(s & 1));
    p.bits.push_back(static_cast<std::uint8_t>((s >> 1) & 1));
  }
  const auto syms = qam_modulate(p);
  const auto g = build_grid(1, 2, p, num, &mask);
  EXPECT_EQ(g.symbols(0, 0), cd{});
  EXPECT_EQ(g.symbols(5, 1), cd{});
  EXPECT_EQ(g.symbols(1, 0), syms[0]);
  EXPECT_EQ(g.symbols(0, 1), syms[11]);
  EXPECT_EQ(g.symbols(6, 1), syms[16]);
}

TEST(BuildGrid, FullGridSize) {
  Rng rng(1);
  const auto p = random_payload(624 * 14, 4, rng);
  const auto g = build_grid(52, 14, p, numerology_params(3));
  EXPECT_EQ(g.m_subcarriers(), 624);
  EXPECT_EQ(g.l_symbols(), 14);
}

TEST(BuildGrid, RejectsCountMismatch) {
  Rng rng(1);
  const auto p = random_payload(10, 4, rng);
  EXPECT_THROW(build_grid(1, 1, p, numerology_params(3)), DimensionError);
  EXPECT_THROW(build_grid(0, 1, p, numerology_params(3)), ConfigError);
}
