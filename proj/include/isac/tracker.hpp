#pragma once

// Extended Kalman filter over the kinematic state x = (azimuth, distance,
// speed, |reflection|) with identity observation.

#include "isac/common.hpp"
#include "isac/radar_est.hpp"

#include <optional>
#include <utility>

namespace isac {

struct KinState {
  double azimuth = 0.0;
  double distance = 1.0;
  double speed = 0.0;
  double reflection = 0.0;

  Eigen::Vector4d vector() const { return {azimuth, distance, speed, reflection}; }
  static KinState from(const Eigen::Vector4d& v) { return {v(0), v(1), v(2), v(3)}; }
};

struct ProcessNoise {
  Eigen::Vector4d q{1e-6, 1e-6, 1e-6, 1e-8};  // (sigma_theta^2, sigma_d^2, sigma_v^2, sigma_beta^2)

  static ProcessNoise from_sigmas(double s_theta, double s_d, double s_v, double s_beta) {
    return {Eigen::Vector4d{s_theta * s_theta, s_d * s_d, s_v * s_v, s_beta * s_beta}};
  }

  void validate() const {
    if (!(q.array() > 0.0).all()) throw ConfigError("process noise: variances must be positive");
  }
};

/// Noiseless state evolution over one slot of length dt:
///   theta' = theta - v dt cos(theta) / d
///   d'     = d - v dt sin(theta)
///   v'     = v
///   beta'  = beta (1 - v dt sin(theta) / d)^2
inline KinState state_transition(const KinState& x, double dt) {
  if (!(x.distance > 0.0)) throw GeometryError("state_transition: distance must be positive");
  const double s = std::sin(x.azimuth);
  const double c = std::cos(x.azimuth);
  const double step = x.speed * dt;
  const double iota = 1.0 - step * s / x.distance;
  KinState n{x.azimuth - step * c / x.distance, x.distance - step * s, x.speed, x.reflection * iota * iota};
  if (!(n.distance > 0.0)) throw GeometryError("state_transition: target passed through the BS");
  return n;
}

inline Eigen::Matrix4d jacobian(const KinState& x, double dt) {
  if (!(x.distance > 0.0)) throw GeometryError("jacobian: distance must be positive");
  const double d = x.distance;
  const double v = x.speed;
  const double b = x.reflection;
  const double s = std::sin(x.azimuth);
  const double c = std::cos(x.azimuth);
  const double iota = 1.0 - v * dt * s / d;
  Eigen::Matrix4d g;
  // clang-format off
  g << 1.0 + v * dt * s / d,             v * dt * c / (d * d),                 -dt * c / d,                  0.0,
       -v * dt * c,                      1.0,                                  -dt * s,                      0.0,
       0.0,                              0.0,                                  1.0,                          0.0,
       -2.0 * b * v * dt * c / d * iota, 2.0 * b * v * dt * s / (d * d) * iota, -2.0 * b * dt * s / d * iota, iota * iota;
  // clang-format on
  return g;
}

struct EkfState {
  KinState estimate;                                 // x_{n-1} before update, x_n after
  Eigen::Matrix4d mse = Eigen::Matrix4d::Zero();     // M_n
  KinState one_step;                                 // x_{n|n-1}
  Eigen::Matrix4d predicted_mse = Eigen::Matrix4d::Zero();  // M_{n|n-1}
  std::optional<KinState> two_step;                  // x_{n+1|n-1}
  std::optional<KinState> rx_prior;                  // x_{n|n-2}, from the previous slot
  double init_azimuth = 0.0;
  bool predicted = false;
  double last_nis = 0.0;                             // normalized innovation squared of the last update
};

inline EkfState initialize(const Measurement& first, double init_mse_scale = 10.0, double fallback_speed_var = 1e2) {
  EkfState s;
  s.estimate = KinState::from(first.vector());
  s.mse = init_mse_scale * first.covariance;
  if (!first.velocity_valid) s.mse(2, 2) = std::max(s.mse(2, 2), fallback_speed_var);
  s.one_step = s.estimate;
  s.init_azimuth = first.azimuth;
  return s;
}

inline EkfState predict(const EkfState& ekf, const ProcessNoise& noise, double dt) {
  EkfState n = ekf;
  n.rx_prior = ekf.two_step;
  n.one_step = state_transition(ekf.estimate, dt);
  n.two_step = state_transition(n.one_step, dt);
  const Eigen::Matrix4d g = jacobian(ekf.estimate, dt);
  n.predicted_mse = g * ekf.mse * g.transpose();
  n.predicted_mse.diagonal() += noise.q;
  n.predicted_mse = 0.5 * (n.predicted_mse + n.predicted_mse.transpose()).eval();
  n.predicted = true;
  return n;
}

/// Measurement update with H = I. Components flagged unusable (currently the
/// velocity) are dropped from the observation so the prediction passes through.
inline EkfState update(const EkfState& ekf, const Measurement& y) {
  if (!ekf.predicted) throw EstimationError("update: predict must run first");
  std::vector<int> rows{0, 1};
  if (y.velocity_valid) rows.push_back(2);
  rows.push_back(3);
  const auto n_obs = static_cast<Eigen::Index>(rows.size());

  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n_obs, 4);
  Eigen::MatrixXd r(n_obs, n_obs);
  Eigen::VectorXd z(n_obs);
  const Eigen::Vector4d yv = y.vector();
  for (Eigen::Index i = 0; i < n_obs; ++i) {
    h(i, rows[i]) = 1.0;
    z(i) = yv(rows[i]);
    for (Eigen::Index j = 0; j < n_obs; ++j) r(i, j) = y.covariance(rows[i], rows[j]);
  }

  const Eigen::Vector4d xp = ekf.one_step.vector();
  const Eigen::Matrix4d& p = ekf.predicted_mse;
  const Eigen::MatrixXd s = h * p * h.transpose() + r;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(s);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.vectorD().minCoeff() <= 0.0)
    throw EstimationError("update: innovation covariance is singular");
  const Eigen::MatrixXd k = p * h.transpose() * ldlt.solve(Eigen::MatrixXd::Identity(n_obs, n_obs));
  const Eigen::VectorXd innovation = z - h * xp;

  EkfState n = ekf;
  n.estimate = KinState::from(xp + k * innovation);
  const Eigen::Matrix4d a = Eigen::Matrix4d::Identity() - k * h;
  n.mse = a * p * a.transpose() + k * r * k.transpose();  // Joseph form
  n.mse = 0.5 * (n.mse + n.mse.transpose()).eval();
  n.last_nis = innovation.dot(ldlt.solve(innovation));
  return n;
}

/// No measurement this slot: the prediction becomes the estimate.
inline EkfState coast(const EkfState& ekf) {
  if (!ekf.predicted) throw EstimationError("coast: predict must run first");
  EkfState n = ekf;
  n.estimate = ekf.one_step;
  n.mse = ekf.predicted_mse;
  return n;
}

struct BeamAngles {
  double tx_azimuth = 0.0;  // theta_{n|n-1}
  double rx_azimuth = 0.0;  // theta_{n|n-2}
};

inline BeamAngles beam_angles(const EkfState& ekf) {
  if (!ekf.predicted) return {ekf.init_azimuth, ekf.init_azimuth};
  return {ekf.one_step.azimuth, ekf.rx_prior ? ekf.rx_prior->azimuth : ekf.init_azimuth};
}

}  // namespace isac
