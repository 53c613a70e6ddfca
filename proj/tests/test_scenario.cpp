#include "isac/scenario.hpp"
#include "isac/rng.hpp"

#include <gtest/gtest.h>

using namespace isac;

TEST(Propagate, AdvancesAlongRoad) {
  SceneGeometry g;
  g.road_axis = {0.0, 1.0};
  const VehicleState v{{25.0, 40.0}, 20.0, 0.0};
  const auto n = propagate(g, v, 0.125e-3);
  EXPECT_DOUBLE_EQ(n.position.x(), 25.0);
  EXPECT_NEAR(n.position.y(), 40.0025, 1e-12);
  EXPECT_DOUBLE_EQ(n.speed, 20.0);
  EXPECT_DOUBLE_EQ(n.time, 0.125e-3);
}

TEST(Propagate, ZeroSpeedIsFixedPoint) {
  SceneGeometry g;
  const VehicleState v{{3.0, -7.0}, 0.0, 1.0};
  const auto n = propagate(g, v, 0.5);
  EXPECT_EQ(n.position, v.position);
}

TEST(Propagate, HalfStepsCompose) {
  SceneGeometry g;
  g.road_axis = Eigen::Vector2d(0.6, -0.8);
  const VehicleState v{{25.0, 40.0}, 17.0, 0.0};
  const auto one = propagate(g, v, 0.01);
  const auto two = propagate(g, propagate(g, v, 0.005), 0.005);
  EXPECT_NEAR((one.position - two.position).norm(), 0.0, 1e-12);
  EXPECT_NEAR(one.time, two.time, 1e-15);
}

TEST(Propagate, RejectsNonPositiveStep) {
  SceneGeometry g;
  EXPECT_THROW(propagate(g, VehicleState{}, 0.0), GeometryError);
  EXPECT_THROW(propagate(g, VehicleState{}, -1.0), GeometryError);
}

TEST(Observe, DefaultVehicleMatchesHandGeometry) {
  SceneGeometry g;
  const VehicleState v;  // (25, 40), 20 m/s
  const ScattererSpec s;
  const auto t = observe(g, v, s, 35e9);
  const double ground = std::sqrt(25.0 * 25.0 + 40.0 * 40.0);
  const double d = std::sqrt(ground * ground + 9.0);
  EXPECT_NEAR(t.distance, d, 1e-12);
  EXPECT_NEAR(t.azimuth, std::atan2(40.0, 25.0), 1e-12);
  EXPECT_NEAR(t.elevation, -std::atan(3.0 / ground), 1e-12);
  EXPECT_NEAR(t.delay, 2.0 * d / 3e8, 1e-20);
  EXPECT_NEAR(std::abs(t.reflection - s.rcs / (4.0 * d * d)), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(t.speed, 20.0);
}

TEST(Observe, BroadsideExample) {
  SceneGeometry g;
  g.bs_position = {0.0, 0.0, 1.0};
  g.road_axis = {-1.0, 0.0};  // straight towards the BS
  const VehicleState v{{50.0, 0.0}, 20.0, 0.0};
  const auto t = observe(g, v, ScattererSpec{}, 35e9);
  EXPECT_NEAR(t.azimuth, 0.0, 1e-15);
  EXPECT_NEAR(t.radial_velocity, 20.0, 1e-12);
  EXPECT_NEAR(t.delay, 333.333e-9, 1e-12);
  EXPECT_NEAR(t.doppler, 2.0 * 20.0 * 35e9 / 3e8, 1e-6);
}

TEST(Observe, UnitRcsAtHalfMetre) {
  SceneGeometry g;
  ScattererSpec s{ScattererKind::NlosStatic, {0.5, 0.0, 4.0}, cd{1.0, 0.0}, 0.0, 0.0};
  const auto t = observe(g, VehicleState{}, s, 35e9);
  EXPECT_NEAR(std::abs(t.reflection - cd{1.0, 0.0}), 0.0, 1e-12);
}

TEST(Observe, StaticScattererHasNoDoppler) {
  SceneGeometry g;
  ScattererSpec s{ScattererKind::NlosStatic, {45.0, 12.0, 8.0}, cd{40.0, 0.0}, -10.0, 0.7};
  const auto t = observe(g, VehicleState{}, s, 35e9);
  EXPECT_EQ(t.radial_velocity, 0.0);
  EXPECT_EQ(t.doppler, 0.0);
}

TEST(Observe, RejectsColocatedTarget) {
  SceneGeometry g;
  ScattererSpec s{ScattererKind::NlosStatic, g.bs_position, cd{1.0, 0.0}, 0.0, 0.0};
  EXPECT_THROW(observe(g, VehicleState{}, s, 35e9), GeometryError);
}

// Angles and range must reproduce the scatterer point; the radial velocity
// must equal the range rate from a finite difference of the trajectory.
TEST(Observe, RandomGeometryProperties) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    SceneGeometry g;
    const double heading = rng.uniform(-kPi, kPi);
    g.road_axis = {std::cos(heading), std::sin(heading)};
    g.bs_position.z() = rng.uniform(0.0, 10.0);
    g.vehicle_height = rng.uniform(0.0, 3.0);
    const VehicleState v{{rng.uniform(5.0, 60.0), rng.uniform(-60.0, 60.0)}, rng.uniform(0.0, 30.0), 0.0};
    const auto t = observe(g, v, ScattererSpec{}, 35e9);

    const Eigen::Vector3d dir{std::cos(t.elevation) * std::cos(t.azimuth), std::cos(t.elevation) * std::sin(t.azimuth),
                              std::sin(t.elevation)};
    const Eigen::Vector3d rebuilt = g.bs_position + t.distance * dir;
    EXPECT_NEAR((rebuilt - vehicle_point(g, v)).norm(), 0.0, 1e-9);

    const double h = 1e-4;
    VehicleState ahead = v, behind = v;
    ahead.position += v.speed * h * g.road_axis;
    behind.position -= v.speed * h * g.road_axis;
    const double rate = (observe(g, ahead, ScattererSpec{}, 35e9).distance -
                         observe(g, behind, ScattererSpec{}, 35e9).distance) / (2.0 * h);
    EXPECT_NEAR(t.radial_velocity, -rate, 1e-6);
    EXPECT_NEAR(t.radial_velocity, v.speed * radial_projection(g.road_axis, t.azimuth, t.elevation), 1e-9);
  }
}

TEST(Observe, ZeroSpeedPropagationLeavesParametersUnchanged) {
  SceneGeometry g;
  VehicleState v;
  v.speed = 0.0;
  const auto a = observe(g, v, ScattererSpec{}, 35e9);
  const auto b = observe(g, propagate(g, v, 0.3), ScattererSpec{}, 35e9);
  EXPECT_EQ(a.azimuth, b.azimuth);
  EXPECT_EQ(a.distance, b.distance);
  EXPECT_EQ(a.reflection, b.reflection);
}

TEST(VehicleAngles, LosPathMirrorsBsAngles) {
  SceneGeometry g;
  const VehicleState v;
  const Eigen::Vector3d p = vehicle_point(g, v);
  const auto [az_bs, el_bs] = bs_angles(p - g.bs_position);
  const auto [az_v, el_v] = vehicle_angles(g.bs_position - p);
  EXPECT_NEAR(az_v, az_bs, 1e-12);
  EXPECT_NEAR(el_v, -el_bs, 1e-12);
}

TEST(Trajectory, SampleCountAndEndPoint) {
  SceneGeometry g;
  const VehicleState v;
  const auto traj = trajectory(g, v, 0.125e-3, 0.025);
  ASSERT_EQ(traj.size(), 201u);
  EXPECT_NEAR(traj.back().time, 0.025, 1e-15);
  EXPECT_NEAR(traj.back().position.y(), 40.0 - 20.0 * 0.025, 1e-12);
  for (std::size_t i = 1; i < traj.size(); ++i) EXPECT_GT(traj[i].time, traj[i - 1].time);
}

TEST(Trajectory, RejectsBadStep) { EXPECT_THROW(trajectory(SceneGeometry{}, VehicleState{}, 0.0, 1.0), ConfigError); }

TEST(SceneGeometry, Validation) {
  SceneGeometry g;
  EXPECT_NO_THROW(g.validate());
  g.road_axis = {1.0, 1.0};
  EXPECT_THROW(g.validate(), ConfigError);
  g = SceneGeometry{};
  g.vehicle_height = -1.0;
  EXPECT_THROW(g.validate(), ConfigError);
}
