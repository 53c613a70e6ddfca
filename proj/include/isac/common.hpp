#pragma once

#include <Eigen/Dense>

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace isac {

using cd = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

inline constexpr double kSpeedOfLight = 3.0e8;
inline constexpr double kPi = std::numbers::pi;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration (raised before any simulation work).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Vectors / matrices whose sizes do not agree with the array or grid.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Degenerate geometry: zero distance, target passed through the BS, ...
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure inside an estimator (non-finite input, failed eigensolve, ...).
class EstimationError : public Error {
 public:
  using Error::Error;
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

}  // namespace isac
