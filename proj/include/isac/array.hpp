#pragma once

// Uniform planar arrays with half-wavelength spacing.
//
// Element (p, q), p < nx along the horizontal axis and q < ny along the
// vertical axis, sits at index p * ny + q and carries the phase
//   pi * (p * sin(az) * cos(el) + q * sin(el)),
// i.e. the steering vector is v_az (length nx) kron v_el (length ny).

#include "isac/common.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace isac {

struct UpaConfig {
  int nx = 8;
  int ny = 8;

  int size() const { return nx * ny; }

  void validate() const {
    if (nx < 1 || ny < 1) throw ConfigError("array: nx and ny must be >= 1");
  }
};

/// Unit-norm weight vector over the elements of a UPA.
class BeamVector {
 public:
  BeamVector() = default;
  explicit BeamVector(CVec weights) : weights_(std::move(weights)) {}

  const CVec& weights() const { return weights_; }
  Eigen::Index size() const { return weights_.size(); }

  /// Inner product this^H * other.
  cd inner(const BeamVector& other) const {
    if (other.size() != size()) throw DimensionError("BeamVector::inner: size mismatch");
    return weights_.dot(other.weights_);
  }

 private:
  CVec weights_;
};

/// Length-n ULA factor with spatial frequency s: (1/sqrt(n)) [e^{j pi k s}]_k.
inline CVec ula_factor(int n, double spatial_freq) {
  CVec v(n);
  const double norm = 1.0 / std::sqrt(static_cast<double>(n));
  for (int k = 0; k < n; ++k) v(k) = std::polar(norm, kPi * k * spatial_freq);
  return v;
}

inline CVec kron(const CVec& a, const CVec& b) {
  CVec out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

inline BeamVector beam_from_spatial_freq(const UpaConfig& cfg, double s_az, double s_el) {
  return BeamVector(kron(ula_factor(cfg.nx, s_az), ula_factor(cfg.ny, s_el)));
}

inline BeamVector steering_vector(const UpaConfig& cfg, double azimuth, double elevation) {
  return beam_from_spatial_freq(cfg, std::sin(azimuth) * std::cos(elevation), std::sin(elevation));
}

/// Matched (conjugate) beamformer pointed at (azimuth, elevation): a^H(theta) f
/// is maximal, and equal to one, when the target sits exactly there.
inline BeamVector conjugate_beamformer(const UpaConfig& cfg, double azimuth, double elevation) {
  return steering_vector(cfg, azimuth, elevation);
}

struct CodebookBeam {
  double azimuth = 0.0;
  double elevation = 0.0;
  BeamVector beam;
};

struct Codebook {
  std::vector<CodebookBeam> beams;
  int o_az = 1;
  int o_el = 1;
};

/// Spatial frequencies 2k / (n * o) for k = -floor(n*o/2) .. ceil(n*o/2) - 1,
/// all within [-1, 1).
inline std::vector<double> dft_spatial_grid(int n, int o) {
  const int count = n * o;
  std::vector<double> s;
  s.reserve(static_cast<std::size_t>(count));
  for (int k = -(count / 2); k < count - count / 2; ++k) s.push_back(2.0 * k / count);
  return s;
}

/// Oversampled 2D DFT codebook. Beam order: azimuth-major, elevation-minor.
inline Codebook dft_codebook(const UpaConfig& cfg, int o_az, int o_el) {
  if (o_az < 1 || o_el < 1) throw ConfigError("dft_codebook: oversampling must be >= 1");
  Codebook cb;
  cb.o_az = o_az;
  cb.o_el = o_el;
  const auto az_grid = dft_spatial_grid(cfg.nx, o_az);
  const auto el_grid = dft_spatial_grid(cfg.ny, o_el);
  cb.beams.reserve(az_grid.size() * el_grid.size());
  for (double s_az : az_grid) {
    for (double s_el : el_grid) {
      // Per-axis |s| <= 1 always holds on this grid. Pairs outside the unit
      // disc have no physical direction; their azimuth saturates at +-pi/2.
      const double el = std::asin(s_el);
      const double ratio = std::clamp(s_az / std::cos(el), -1.0, 1.0);
      cb.beams.push_back({std::asin(ratio), el, beam_from_spatial_freq(cfg, s_az, s_el)});
    }
  }
  return cb;
}

}  // namespace isac
