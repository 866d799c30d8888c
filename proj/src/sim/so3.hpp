#pragma once

#include <cmath>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace noct::sim {

inline Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

inline Eigen::Matrix3d so3_exp(const Eigen::Vector3d& w) {
  const double theta = w.norm();
  if (theta < 1e-12) return Eigen::Matrix3d::Identity() + skew(w);
  return Eigen::AngleAxisd(theta, w / theta).toRotationMatrix();
}

inline Eigen::Vector3d so3_log(const Eigen::Matrix3d& r) {
  const Eigen::AngleAxisd aa(r);
  return aa.angle() * aa.axis();
}

/// Rotation about a coordinate axis (0, 1, 2) by `angle`.
inline Eigen::Matrix3d axis_rotation(int axis, double angle) {
  return Eigen::AngleAxisd(angle, Eigen::Vector3d::Unit(axis)).toRotationMatrix();
}

/// Re-orthonormalises a rotation that accumulated rounding error.
inline Eigen::Matrix3d normalized(const Eigen::Matrix3d& r) { return Eigen::Quaterniond(r).normalized().toRotationMatrix(); }

}  // namespace noct::sim
