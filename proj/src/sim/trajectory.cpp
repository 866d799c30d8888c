#include "noct/sim/trajectory.hpp"

#include <array>
#include <cmath>
#include <vector>

#include "so3.hpp"

namespace noct::sim {

namespace {

using Eigen::Matrix3d;
using Eigen::Vector3d;

constexpr double kPi = 3.14159265358979323846;
const double kSlope = 30.0 * kPi / 180.0;

struct Kinematics {
  Vector3d p = Vector3d::Zero(), v = Vector3d::Zero(), a = Vector3d::Zero();
};

/// One factor of R = R_1 R_2 ... R_n with its angle and angular rate.
struct Elementary {
  int axis;
  double angle;
  double rate;
};

void set_orientation(TrajectorySample& s, const std::vector<Elementary>& chain) {
  std::vector<Matrix3d> factors;
  for (const auto& e : chain) factors.push_back(axis_rotation(e.axis, e.angle));
  s.R.setIdentity();
  for (const auto& f : factors) s.R = s.R * f;
  // omega_B = sum_i (R_{i+1} ... R_n)^T e_i rate_i
  s.omega.setZero();
  Matrix3d tail = Matrix3d::Identity();
  for (std::size_t i = chain.size(); i-- > 0;) {
    s.omega += tail.transpose() * Vector3d::Unit(chain[i].axis) * chain[i].rate;
    tail = factors[i] * tail;
  }
}

/// Circle of radius r at phase phi(t) with derivatives phid, phidd.
Kinematics circle(double r, double phi, double phid, double phidd) {
  Kinematics k;
  const double c = std::cos(phi), s = std::sin(phi);
  k.p = {r * c, r * s, 0};
  k.v = {-r * phid * s, r * phid * c, 0};
  k.a = {-r * phidd * s - r * phid * phid * c, r * phidd * c - r * phid * phid * s, 0};
  return k;
}

/// Maps in-plane kinematics onto the inclined plane.
Kinematics on_slope(const Kinematics& k) {
  const Matrix3d r = axis_rotation(0, kSlope);
  return {r * k.p, r * k.v, r * k.a};
}

}  // namespace

const char* to_string(TrajectoryKind kind) {
  switch (kind) {
    case TrajectoryKind::kSlopeLine:
      return "slope_line";
    case TrajectoryKind::kSlopeLemniscate:
      return "slope_lemniscate";
    case TrajectoryKind::kSlopeCircle:
      return "slope_circle";
    case TrajectoryKind::kCircleConstVel:
      return "circle_const_vel";
    case TrajectoryKind::kCylinderConstAccel:
      return "cylinder_const_accel";
    case TrajectoryKind::kCircleVaryingRate:
      return "circle_varying_rate";
    case TrajectoryKind::kCylinderVaryingAccel:
      return "cylinder_varying_accel";
    case TrajectoryKind::kGeneral3D:
      return "general_3d";
  }
  return "?";
}

TrajectoryKind trajectory_kind_from_string(std::string_view name) {
  for (int k = 0; k <= static_cast<int>(TrajectoryKind::kGeneral3D); ++k) {
    const auto kind = static_cast<TrajectoryKind>(k);
    if (name == to_string(kind)) return kind;
  }
  throw UnknownKind("unknown trajectory kind '" + std::string(name) + "'");
}

Vector3d gravity_world() { return {0, 0, -9.81}; }

Vector3d TrajectorySample::specific_force() const { return R.transpose() * (a - gravity_world()); }

TrajectorySample Trajectory::operator()(double t) const {
  TrajectorySample s;
  s.t = t;
  Kinematics k;
  std::vector<Elementary> chain;

  switch (kind_) {
    case TrajectoryKind::kSlopeLine: {
      const double amp = 1.5, w = 0.8;
      k.p = {amp * std::sin(w * t), 0, 0};
      k.v = {amp * w * std::cos(w * t), 0, 0};
      k.a = {-amp * w * w * std::sin(w * t), 0, 0};
      k = on_slope(k);
      chain = {{0, kSlope, 0}, {2, 0.4, 0}};
      break;
    }
    case TrajectoryKind::kSlopeLemniscate: {
      // Gerono lemniscate x = A sin(wt), y = A sin(wt) cos(wt), heading along the tangent.
      const double amp = 2.5, w = 0.3;
      const double s1 = std::sin(w * t), c1 = std::cos(w * t);
      const double s2 = std::sin(2 * w * t), c2 = std::cos(2 * w * t);
      k.p = {amp * s1, 0.5 * amp * s2, 0};
      k.v = {amp * w * c1, amp * w * c2, 0};
      k.a = {-amp * w * w * s1, -2 * amp * w * w * s2, 0};
      const double vx = k.v.x(), vy = k.v.y(), ax = k.a.x(), ay = k.a.y();
      const double sp2 = vx * vx + vy * vy;
      const double psi = std::atan2(vy, vx);
      const double psid = (vx * ay - vy * ax) / sp2;
      k = on_slope(k);
      chain = {{0, kSlope, 0}, {2, psi, psid}};
      break;
    }
    case TrajectoryKind::kSlopeCircle: {
      const double r = 2.0, w = 0.5;
      k = on_slope(circle(r, w * t, w, 0));
      chain = {{0, kSlope, 0}, {2, w * t + kPi / 2, w}};
      break;
    }
    case TrajectoryKind::kCircleConstVel: {
      const double r = 2.0, w = 0.5;
      k = circle(r, w * t, w, 0);
      chain = {{2, w * t + kPi / 2, w}};
      break;
    }
    case TrajectoryKind::kCylinderConstAccel: {
      const double r = 2.0, w = 0.5, v0 = -1.5, az = 0.05;
      k = circle(r, w * t, w, 0);
      k.p.z() = v0 * t + 0.5 * az * t * t;
      k.v.z() = v0 + az * t;
      k.a.z() = az;
      chain = {{2, w * t + kPi / 2, w}};
      break;
    }
    case TrajectoryKind::kCircleVaryingRate: {
      const double r = 2.0, w = 0.5, amp = 1.0, beta = 0.7;
      const double phi = w * t + amp * std::sin(beta * t);
      const double phid = w + amp * beta * std::cos(beta * t);
      const double phidd = -amp * beta * beta * std::sin(beta * t);
      k = circle(r, phi, phid, phidd);
      chain = {{2, phi + kPi / 2, phid}};
      break;
    }
    case TrajectoryKind::kCylinderVaryingAccel: {
      const double r = 2.0, w = 0.5, amp = 1.0, beta = 0.7;
      k = circle(r, w * t, w, 0);
      k.p.z() = amp * std::sin(beta * t);
      k.v.z() = amp * beta * std::cos(beta * t);
      k.a.z() = -amp * beta * beta * std::sin(beta * t);
      chain = {{2, w * t + kPi / 2, w}};
      break;
    }
    case TrajectoryKind::kGeneral3D: {
      const std::array<double, 3> amp{3.0, 2.0, 0.8}, w{0.31, 0.47, 0.59}, ph{0.0, 0.5, 1.1};
      for (int i = 0; i < 3; ++i) {
        const double arg = w[i] * t + ph[i];
        k.p[i] = amp[i] * std::sin(arg);
        k.v[i] = amp[i] * w[i] * std::cos(arg);
        k.a[i] = -amp[i] * w[i] * w[i] * std::sin(arg);
      }
      const double yaw = 0.3 * t + 0.8 * std::sin(0.41 * t), yawd = 0.3 + 0.8 * 0.41 * std::cos(0.41 * t);
      const double pitch = 0.35 * std::sin(0.53 * t), pitchd = 0.35 * 0.53 * std::cos(0.53 * t);
      const double roll = 0.35 * std::sin(0.37 * t + 1.0), rolld = 0.35 * 0.37 * std::cos(0.37 * t + 1.0);
      chain = {{2, yaw, yawd}, {1, pitch, pitchd}, {0, roll, rolld}};
      break;
    }
  }
  s.p = k.p;
  s.v = k.v;
  s.a = k.a;
  set_orientation(s, chain);
  return s;
}

}  // namespace noct::sim
