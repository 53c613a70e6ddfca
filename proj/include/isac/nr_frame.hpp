#pragma once

// NR frame-structure accounting: slot patterns, reference-signal ledgers for
// the conventional and ISAC frame layouts, overhead fractions and throughput.
//
// All ledger counts are per pattern period and per resource block.

#include "isac/common.hpp"
#include "isac/waveform.hpp"

#include <algorithm>
#include <span>
#include <string>
#include <vector>

namespace isac {

enum class FrameMode { Conventional, Isac };

enum class ReType : unsigned char { Data, Dmrs, Csirs, Guard, Uplink };

struct SpecialSlotSplit {
  int dl_symbols = 10;
  int guard_symbols = 2;
  int ul_symbols = 2;
};

struct FrameConfig {
  std::string pattern = "DDDSU";
  Numerology numerology = numerology_params(3);
  int dmrs_re_per_period = 42;
  int csirs_re_per_period = 32;
  int csirs_period_slots = 5;
  SpecialSlotSplit special{};
  FrameMode mode = FrameMode::Conventional;

  void validate() const {
    if (pattern.empty()) throw ConfigError("frame: pattern must be non-empty");
    for (char c : pattern)
      if (c != 'D' && c != 'S' && c != 'U') throw ConfigError("frame: pattern may only contain D, S, U");
    if (special.dl_symbols < 0 || special.guard_symbols < 0 || special.ul_symbols < 0 ||
        special.dl_symbols + special.guard_symbols + special.ul_symbols != kSymbolsPerSlot)
      throw ConfigError("frame: special slot split must be nonnegative and sum to 14");
    if (dmrs_re_per_period < 0 || csirs_re_per_period < 0) throw ConfigError("frame: RE counts must be nonnegative");
    if (csirs_period_slots < 1) throw ConfigError("frame: csirs_period_slots must be >= 1");
  }
};

struct ReLedger {
  long total_dl_re = 0;
  long data_re = 0;
  long dmrs_re = 0;
  long csirs_re = 0;
  long guard_re = 0;
  long ul_re = 0;

  long reference_re() const { return dmrs_re + csirs_re; }
  long total_re() const { return data_re + dmrs_re + csirs_re + guard_re + ul_re; }
};

/// Per-symbol direction of one slot: Data (downlink), Guard or Uplink.
inline std::vector<ReType> symbol_directions(char slot, const FrameConfig& cfg) {
  std::vector<ReType> dir(kSymbolsPerSlot, ReType::Data);
  if (cfg.mode == FrameMode::Isac) return dir;  // guard and UL reclaimed for downlink
  if (slot == 'U') {
    std::fill(dir.begin(), dir.end(), ReType::Uplink);
  } else if (slot == 'S') {
    const int g0 = cfg.special.dl_symbols;
    const int u0 = g0 + cfg.special.guard_symbols;
    for (int s = g0; s < u0; ++s) dir[s] = ReType::Guard;
    for (int s = u0; s < kSymbolsPerSlot; ++s) dir[s] = ReType::Uplink;
  }
  return dir;
}

inline ReLedger build_ledger(const FrameConfig& cfg) {
  cfg.validate();
  ReLedger led;
  for (char slot : cfg.pattern) {
    for (ReType t : symbol_directions(slot, cfg)) {
      if (t == ReType::Data) led.total_dl_re += kSubcarriersPerRb;
      if (t == ReType::Guard) led.guard_re += kSubcarriersPerRb;
      if (t == ReType::Uplink) led.ul_re += kSubcarriersPerRb;
    }
  }
  led.dmrs_re = cfg.dmrs_re_per_period;
  led.csirs_re = cfg.mode == FrameMode::Conventional ? cfg.csirs_re_per_period : 0;
  led.data_re = led.total_dl_re - led.dmrs_re - led.csirs_re;
  if (led.data_re < 0) throw ConfigError("frame: reference signals exceed the downlink REs of one period");
  return led;
}

inline double overhead_fraction(const ReLedger& led) {
  if (led.total_dl_re <= 0) throw ConfigError("overhead_fraction: ledger has no downlink REs");
  return static_cast<double>(led.reference_re()) / static_cast<double>(led.total_dl_re);
}

/// Fraction of conventional reference-signal REs removed by the ISAC layout.
inline double overhead_reduction(const ReLedger& conv, const ReLedger& isac) {
  if (conv.reference_re() <= 0) throw ConfigError("overhead_reduction: conventional ledger has no reference REs");
  return static_cast<double>(conv.reference_re() - isac.reference_re()) / static_cast<double>(conv.reference_re());
}

struct ThroughputParams {
  int carriers = 1;
  int layers = 1;
  int modulation_order = 4;
  int n_prb = 52;
  double symbol_duration = 8.929e-6;
  double ber = 0.0;
  double overhead = 0.0;
};

/// Throughput in Mbps summed over component carriers.
inline double throughput(std::span<const ThroughputParams> carriers) {
  double sum = 0.0;
  for (const auto& p : carriers) {
    if (p.ber < 0.0 || p.overhead < 0.0 || p.ber + p.overhead > 1.0 + 1e-12)
      throw ConfigError("throughput: need 0 <= ber, overhead and ber + overhead <= 1");
    if (p.layers < 1 || p.modulation_order < 1 || p.n_prb < 1 || !(p.symbol_duration > 0.0))
      throw ConfigError("throughput: counts and symbol duration must be positive");
    sum += p.layers * p.modulation_order * (p.n_prb * 12.0 / p.symbol_duration) * (1.0 - p.ber - p.overhead);
  }
  return 1e-6 * sum;
}

/// J identical carriers.
inline double throughput(const ThroughputParams& p) {
  std::vector<ThroughputParams> all(static_cast<std::size_t>(std::max(p.carriers, 0)), p);
  if (all.empty()) throw ConfigError("throughput: carriers must be >= 1");
  return throughput(std::span<const ThroughputParams>(all));
}

/// Dense subcarrier x symbol map of RE types.
class ReTypeGrid {
 public:
  ReTypeGrid() = default;
  ReTypeGrid(int rows, int cols, ReType fill = ReType::Data)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  ReType& operator()(int k, int l) { return data_[static_cast<std::size_t>(l) * rows_ + k]; }
  ReType operator()(int k, int l) const { return data_[static_cast<std::size_t>(l) * rows_ + k]; }

  long count(ReType t) const { return static_cast<long>(std::count(data_.begin(), data_.end(), t)); }

  ReMask mask(ReType t) const {
    ReMask m(rows_, cols_);
    for (int l = 0; l < cols_; ++l)
      for (int k = 0; k < rows_; ++k) m(k, l) = (*this)(k, l) == t;
    return m;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<ReType> data_;
};

/// RE-type assignment for one pattern period and one resource block.
struct RePattern {
  std::vector<ReTypeGrid> slots;  // 12 x 14 each

  long count(ReType t) const {
    long n = 0;
    for (const auto& s : slots) n += s.count(t);
    return n;
  }
};

namespace detail {
inline constexpr int kDmrsSymbols[] = {2, 11};  // type-A position 2 plus one additional DMRS
inline constexpr int kFirstCsirsSymbol = 5;
}  // namespace detail

inline RePattern re_positions(const FrameConfig& cfg) {
  cfg.validate();
  const int n_slots = static_cast<int>(cfg.pattern.size());
  RePattern rp;
  rp.slots.reserve(cfg.pattern.size());
  for (int s = 0; s < n_slots; ++s) {
    const auto dir = symbol_directions(cfg.pattern[s], cfg);
    ReTypeGrid g(kSubcarriersPerRb, kSymbolsPerSlot);
    for (int l = 0; l < kSymbolsPerSlot; ++l)
      for (int k = 0; k < kSubcarriersPerRb; ++k) g(k, l) = dir[l];
    rp.slots.push_back(std::move(g));
  }

  // DMRS: even subcarriers of symbols 2 and 11 slot by slot, then odd ones.
  long dmrs_left = cfg.dmrs_re_per_period;
  for (int parity = 0; parity < 2 && dmrs_left > 0; ++parity)
    for (int s = 0; s < n_slots && dmrs_left > 0; ++s)
      for (int l : detail::kDmrsSymbols)
        for (int k = parity; k < kSubcarriersPerRb && dmrs_left > 0; k += 2)
          if (rp.slots[s](k, l) == ReType::Data) {
            rp.slots[s](k, l) = ReType::Dmrs;
            --dmrs_left;
          }
  if (dmrs_left > 0) throw ConfigError("frame: cannot place the configured DMRS REs");

  if (cfg.mode == FrameMode::Conventional && cfg.csirs_re_per_period > 0) {
    if (n_slots % cfg.csirs_period_slots != 0)
      throw ConfigError("frame: pattern length must be a multiple of csirs_period_slots");
    const int occurrences = n_slots / cfg.csirs_period_slots;
    if (cfg.csirs_re_per_period % occurrences != 0)
      throw ConfigError("frame: CSI-RS REs do not split evenly over the CSI-RS occasions of a period");
    for (int s = 0; s < n_slots; s += cfg.csirs_period_slots) {
      long left = cfg.csirs_re_per_period / occurrences;
      for (int l = detail::kFirstCsirsSymbol; l < kSymbolsPerSlot && left > 0; ++l)
        for (int k = 0; k < kSubcarriersPerRb && left > 0; ++k)
          if (rp.slots[s](k, l) == ReType::Data) {
            rp.slots[s](k, l) = ReType::Csirs;
            --left;
          }
      if (left > 0) throw ConfigError("frame: cannot place the configured CSI-RS REs");
    }
  }
  return rp;
}

/// RE types of one slot over n_prb resource blocks (M = 12 n_prb rows).
inline ReTypeGrid slot_layout(const RePattern& rp, std::size_t slot_in_period, int n_prb) {
  const auto& rb = rp.slots.at(slot_in_period);
  ReTypeGrid out(kSubcarriersPerRb * n_prb, kSymbolsPerSlot);
  for (int r = 0; r < n_prb; ++r)
    for (int l = 0; l < kSymbolsPerSlot; ++l)
      for (int k = 0; k < kSubcarriersPerRb; ++k) out(r * kSubcarriersPerRb + k, l) = rb(k, l);
  return out;
}

inline const char* to_string(ReType t) {
  switch (t) {
    case ReType::Data: return "data";
    case ReType::Dmrs: return "dmrs";
    case ReType::Csirs: return "csirs";
    case ReType::Guard: return "guard";
    case ReType::Uplink: return "ul";
  }
  return "?";
}

inline const char* to_string(FrameMode m) { return m == FrameMode::Isac ? "isac" : "conventional"; }

}  // namespace isac
