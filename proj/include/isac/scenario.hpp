#pragma once

// Ground-truth vehicle kinematics and their radar-visible parameters.
//
// Coordinate convention (used project-wide):
//   * The BS array lies in the y-z plane and faces +x (broadside).
//   * Azimuth is measured in the horizontal plane from broadside towards +y.
//   * Elevation is measured from the horizontal plane, positive upwards.
//   * The vehicle array faces the BS: its frame is the BS frame rotated by pi
//     about z, so a LoS path arrives at the vehicle with the BS-side azimuth
//     and the negated BS-side elevation.

#include "isac/common.hpp"

#include <cmath>
#include <tuple>
#include <vector>

namespace isac {

struct SceneGeometry {
  Eigen::Vector3d bs_position{0.0, 0.0, 4.0};
  Eigen::Vector2d road_axis{0.0, -1.0};
  double vehicle_height = 1.0;

  void validate() const {
    if (std::abs(road_axis.norm() - 1.0) > 1e-9) throw ConfigError("scene: road_axis must have unit norm");
    if (bs_position.z() < 0.0 || vehicle_height < 0.0) throw ConfigError("scene: heights must be nonnegative");
  }
};

struct VehicleState {
  Eigen::Vector2d position{25.0, 40.0};
  double speed = 20.0;  // m/s along road_axis
  double time = 0.0;
};

enum class ScattererKind { LosVehicle, NlosStatic };

struct ScattererSpec {
  ScattererKind kind = ScattererKind::LosVehicle;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // ignored for the vehicle
  cd rcs{100.0, 0.0};                                   // complex radar cross-section epsilon
  // Communication path: NLoS power relative to the LoS path and a fixed phase.
  double relative_power_db = 0.0;
  double phase_rad = 0.0;
};

struct TargetParams {
  double azimuth = 0.0;
  double elevation = 0.0;
  double distance = 0.0;
  double radial_velocity = 0.0;  // positive when approaching the BS
  double speed = 0.0;
  cd reflection{0.0, 0.0};
  double delay = 0.0;
  double doppler = 0.0;
};

/// Constant-velocity motion along the road for one step of length dt.
inline VehicleState propagate(const SceneGeometry& geom, const VehicleState& state, double dt) {
  if (!(dt > 0.0)) throw GeometryError("propagate: dt must be positive");
  VehicleState next = state;
  next.position += state.speed * dt * geom.road_axis;
  next.time += dt;
  return next;
}

inline Eigen::Vector3d vehicle_point(const SceneGeometry& geom, const VehicleState& v) {
  return {v.position.x(), v.position.y(), geom.vehicle_height};
}

/// Azimuth/elevation of a direction vector in the BS array frame.
inline std::pair<double, double> bs_angles(const Eigen::Vector3d& dir) {
  const double ground = std::hypot(dir.x(), dir.y());
  return {std::atan2(dir.y(), dir.x()), std::atan2(dir.z(), ground)};
}

/// Azimuth/elevation of a direction vector in the vehicle array frame.
inline std::pair<double, double> vehicle_angles(const Eigen::Vector3d& dir) {
  return bs_angles(Eigen::Vector3d{-dir.x(), -dir.y(), dir.z()});
}

/// Reflection coefficient beta = eps * (2d)^-2.
inline cd reflection_coefficient(cd rcs, double distance) {
  if (!(distance > 0.0)) throw GeometryError("reflection_coefficient: distance must be positive");
  return rcs / ((2.0 * distance) * (2.0 * distance));
}

inline TargetParams observe(const SceneGeometry& geom, const VehicleState& vstate, const ScattererSpec& scat,
                            double carrier_hz) {
  const bool vehicle = scat.kind == ScattererKind::LosVehicle;
  const Eigen::Vector3d point = vehicle ? vehicle_point(geom, vstate) : scat.position;
  const Eigen::Vector3d rel = point - geom.bs_position;
  const double d = rel.norm();
  if (!(d > 0.0)) throw GeometryError("observe: scatterer colocated with the BS");
  const Eigen::Vector3d unit = rel / d;

  TargetParams t;
  std::tie(t.azimuth, t.elevation) = bs_angles(unit);
  t.distance = d;
  if (vehicle) {
    const Eigen::Vector3d vel{vstate.speed * geom.road_axis.x(), vstate.speed * geom.road_axis.y(), 0.0};
    t.radial_velocity = -unit.dot(vel);
    t.speed = vstate.speed;
  }
  t.delay = 2.0 * d / kSpeedOfLight;
  t.doppler = 2.0 * t.radial_velocity * carrier_hz / kSpeedOfLight;
  t.reflection = reflection_coefficient(scat.rcs, d);
  return t;
}

/// Samples the trajectory at dt over [0, t_max]: floor(t_max/dt) + 1 states.
inline std::vector<VehicleState> trajectory(const SceneGeometry& geom, const VehicleState& initial, double dt,
                                            double t_max) {
  if (!(dt > 0.0) || t_max < 0.0) throw ConfigError("trajectory: need dt > 0 and t_max >= 0");
  const auto steps = static_cast<std::size_t>(std::floor(t_max / dt + 1e-9));
  std::vector<VehicleState> out;
  out.reserve(steps + 1);
  out.push_back(initial);
  for (std::size_t n = 0; n < steps; ++n) {
    // Positions are evaluated from the start point so rounding does not accumulate.
    VehicleState s = initial;
    const double t = static_cast<double>(n + 1) * dt;
    s.position = initial.position + initial.speed * t * geom.road_axis;
    s.time = initial.time + t;
    out.push_back(s);
  }
  return out;
}

/// Road-speed to radial-speed projection factor for a target seen at
/// (azimuth, elevation): v_radial = v * factor.
inline double radial_projection(const Eigen::Vector2d& road_axis, double azimuth, double elevation) {
  return -(road_axis.x() * std::cos(azimuth) + road_axis.y() * std::sin(azimuth)) * std::cos(elevation);
}

}  // namespace isac
