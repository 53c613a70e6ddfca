#pragma once

// NR numerology arithmetic, Gray-mapped QAM and resource-grid assembly.
// The simulation works on resource elements directly (frequency domain);
// no time-domain OFDM waveform is synthesized.

#include "isac/common.hpp"
#include "isac/rng.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace isac {

inline constexpr int kSymbolsPerSlot = 14;
inline constexpr int kSubcarriersPerRb = 12;

struct Numerology {
  int mu = 3;
  double scs = 120e3;            // Hz
  int slots_per_subframe = 8;
  double symbol_duration = 0.0;  // CP-inclusive average T_s
  double cp_duration = 0.0;
  double useful_duration = 0.0;  // 1 / scs

  double slot_duration() const { return symbol_duration * kSymbolsPerSlot; }
};

inline Numerology numerology_params(int mu) {
  if (mu < 0 || mu > 6) throw ConfigError("numerology: mu must lie in 0..6");
  Numerology n;
  n.mu = mu;
  n.slots_per_subframe = 1 << mu;
  n.scs = 15e3 * n.slots_per_subframe;
  n.symbol_duration = 1e-3 / (kSymbolsPerSlot * n.slots_per_subframe);
  n.useful_duration = 1.0 / n.scs;
  n.cp_duration = n.symbol_duration - n.useful_duration;
  return n;
}

struct BitPayload {
  std::vector<std::uint8_t> bits;
  int modulation_order = 4;  // Q_m, bits per symbol
};

inline bool supported_order(int q_m) { return q_m == 2 || q_m == 4 || q_m == 6; }

namespace detail {

// Gray-coded PAM level for one axis. bits[0] selects the sign, the remaining
// bits the magnitude (3GPP TS 38.211 style square QAM), unnormalized.
inline double gray_pam(std::span<const std::uint8_t> bits) {
  const double sign = 1.0 - 2.0 * bits[0];
  switch (bits.size()) {
    case 1: return sign;
    case 2: return sign * (2.0 - (1.0 - 2.0 * bits[1]));
    case 3: return sign * (4.0 - (1.0 - 2.0 * bits[1]) * (2.0 - (1.0 - 2.0 * bits[2])));
    default: throw ConfigError("qam: unsupported modulation order");
  }
}

inline double qam_scale(int q_m) {
  switch (q_m) {
    case 2: return 1.0 / std::sqrt(2.0);
    case 4: return 1.0 / std::sqrt(10.0);
    case 6: return 1.0 / std::sqrt(42.0);
    default: throw ConfigError("qam: unsupported modulation order " + std::to_string(q_m));
  }
}

}  // namespace detail

/// Gray-mapped square QAM with unit average energy. Bits are taken in groups
/// of Q_m as (i0, q0, i1, q1, ...): even positions drive I, odd drive Q.
inline std::vector<cd> qam_modulate(const BitPayload& payload) {
  const int q = payload.modulation_order;
  const double scale = detail::qam_scale(q);
  if (payload.bits.size() % static_cast<std::size_t>(q) != 0)
    throw DimensionError("qam_modulate: bit count not divisible by Q_m");
  const int half = q / 2;
  std::vector<cd> out(payload.bits.size() / static_cast<std::size_t>(q));
  std::vector<std::uint8_t> ib(half), qb(half);
  for (std::size_t s = 0; s < out.size(); ++s) {
    const std::uint8_t* b = payload.bits.data() + s * q;
    for (int k = 0; k < half; ++k) {
      ib[k] = b[2 * k];
      qb[k] = b[2 * k + 1];
    }
    out[s] = scale * cd(detail::gray_pam(ib), detail::gray_pam(qb));
  }
  return out;
}

namespace detail {

inline void pam_decide(double x, int half, std::uint8_t* out) {
  out[0] = x < 0.0;
  if (half == 1) return;
  const double a = std::abs(x);
  if (half == 2) {
    out[1] = a > 2.0;
    return;
  }
  out[1] = a > 4.0;
  out[2] = std::abs(a - 4.0) > 2.0;
}

}  // namespace detail

/// Hard-decision nearest-point demapping.
inline BitPayload qam_demodulate(std::span<const cd> symbols, int q_m) {
  const double scale = detail::qam_scale(q_m);
  const int half = q_m / 2;
  BitPayload out;
  out.modulation_order = q_m;
  out.bits.resize(symbols.size() * static_cast<std::size_t>(q_m));
  std::uint8_t ib[3], qb[3];
  for (std::size_t s = 0; s < symbols.size(); ++s) {
    detail::pam_decide(symbols[s].real() / scale, half, ib);
    detail::pam_decide(symbols[s].imag() / scale, half, qb);
    std::uint8_t* b = out.bits.data() + s * q_m;
    for (int k = 0; k < half; ++k) {
      b[2 * k] = ib[k];
      b[2 * k + 1] = qb[k];
    }
  }
  return out;
}

/// Every point of the Q_m constellation, indexed by its bit label.
inline std::vector<cd> constellation(int q_m) {
  const std::size_t count = std::size_t{1} << q_m;
  BitPayload all;
  all.modulation_order = q_m;
  all.bits.reserve(count * q_m);
  for (std::size_t v = 0; v < count; ++v)
    for (int k = q_m - 1; k >= 0; --k) all.bits.push_back(static_cast<std::uint8_t>((v >> k) & 1U));
  return qam_modulate(all);
}

inline BitPayload random_payload(std::size_t n_symbols, int q_m, Rng& rng) {
  BitPayload p;
  p.modulation_order = q_m;
  p.bits.resize(n_symbols * static_cast<std::size_t>(q_m));
  std::uint64_t word = 0;
  int left = 0;
  for (auto& b : p.bits) {
    if (left == 0) {
      word = rng.next_u64();
      left = 64;
    }
    b = static_cast<std::uint8_t>(word & 1U);
    word >>= 1;
    --left;
  }
  return p;
}

using ReMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// M x L grid of resource-element symbols (rows: subcarriers, cols: symbols).
struct ResourceGrid {
  CMat symbols;
  Numerology numerology;

  Eigen::Index m_subcarriers() const { return symbols.rows(); }
  Eigen::Index l_symbols() const { return symbols.cols(); }
};

/// Places payload symbols on the data positions of an M x L grid
/// (M = 12 * n_prb), column by column. Positions outside `data_mask` stay
/// zero for the frame mapper to fill. With no mask every RE is data.
inline ResourceGrid build_grid(int n_prb, int l_symbols, const BitPayload& payload, const Numerology& numerology,
                               const ReMask* data_mask = nullptr) {
  if (n_prb < 1 || l_symbols < 1) throw ConfigError("build_grid: n_prb and l_symbols must be >= 1");
  const Eigen::Index m = static_cast<Eigen::Index>(kSubcarriersPerRb) * n_prb;
  if (data_mask && (data_mask->rows() != m || data_mask->cols() != l_symbols))
    throw DimensionError("build_grid: data mask does not match grid size");
  const Eigen::Index n_data = data_mask ? data_mask->count() : m * l_symbols;

  const auto syms = qam_modulate(payload);
  if (static_cast<Eigen::Index>(syms.size()) != n_data)
    throw DimensionError("build_grid: payload carries " + std::to_string(syms.size()) + " symbols, grid has " +
                         std::to_string(n_data) + " data REs");

  ResourceGrid g{CMat::Zero(m, l_symbols), numerology};
  std::size_t next = 0;
  for (Eigen::Index l = 0; l < l_symbols; ++l)
    for (Eigen::Index k = 0; k < m; ++k)
      if (!data_mask || (*data_mask)(k, l)) g.symbols(k, l) = syms[next++];
  return g;
}

}  // namespace isac
