#pragma once

#include <string_view>

#include <Eigen/Core>

#include "noct/errors.hpp"

namespace noct::sim {

class UnknownKind : public Error {
 public:
  using Error::Error;
};

enum class TrajectoryKind {
  kSlopeLine,             // back and forth along a line on a 30 degree slope, no rotation
  kSlopeLemniscate,       // figure eight on the slope, heading along the tangent
  kSlopeCircle,           // circle on the slope at a constant rate
  kCircleConstVel,        // horizontal circle, constant local angular and linear velocity
  kCylinderConstAccel,    // helix with constant vertical acceleration
  kCircleVaryingRate,     // horizontal circle with a varying angular rate
  kCylinderVaryingAccel,  // circle with a sinusoidal vertical motion
  kGeneral3D,             // general 3D motion
};

const char* to_string(TrajectoryKind kind);
TrajectoryKind trajectory_kind_from_string(std::string_view name);

/// Gravity in the world frame, z up.
Eigen::Vector3d gravity_world();

struct TrajectorySample {
  double t = 0;
  Eigen::Vector3d p = Eigen::Vector3d::Zero();      // p_WB
  Eigen::Vector3d v = Eigen::Vector3d::Zero();      // world velocity
  Eigen::Vector3d a = Eigen::Vector3d::Zero();      // world acceleration
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();  // R_WB
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();  // body angular rate

  /// Accelerometer reading without bias or noise, in the body frame.
  Eigen::Vector3d specific_force() const;
};

/// Analytic C2 trajectory with closed-form velocity, acceleration and body rate.
class Trajectory {
 public:
  explicit Trajectory(TrajectoryKind kind) : kind_(kind) {}
  TrajectoryKind kind() const { return kind_; }
  TrajectorySample operator()(double t) const;

 private:
  TrajectoryKind kind_;
};

}  // namespace noct::sim
