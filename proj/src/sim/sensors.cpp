#include "noct/sim/sensors.hpp"

#include <cmath>

#include "so3.hpp"

namespace noct::sim {

using Eigen::Matrix3d;
using Eigen::Vector2d;
using Eigen::Vector3d;

Extrinsics default_extrinsics() {
  Extrinsics e;
  // Camera z along body -y, camera y along body -z.
  Matrix3d base;
  base.col(0) = -Vector3d::UnitX();
  base.col(1) = -Vector3d::UnitZ();
  base.col(2) = -Vector3d::UnitY();
  e.R_BC = base * axis_rotation(0, -0.17) * axis_rotation(1, 0.05);
  e.p_BC = {0.05, -0.04, 0.03};
  return e;
}

std::vector<ImuSample> synthesize_imu(const Trajectory& traj, const SensorConfig& cfg, const Vector3d& bg,
                                      const Vector3d& ba, double duration, std::mt19937_64& rng, bool noisy) {
  const double dt = 1.0 / cfg.imu_rate;
  const auto n = static_cast<std::size_t>(std::llround(duration * cfg.imu_rate));
  std::normal_distribution<double> unit(0.0, 1.0);
  const double sg = cfg.gyro_noise / std::sqrt(dt), sa = cfg.accel_noise / std::sqrt(dt);
  std::vector<ImuSample> out;
  out.reserve(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) * dt;
    const auto s = traj(t);
    ImuSample m;
    m.t = t;
    m.gyro = s.omega + bg;
    m.accel = s.specific_force() + ba;
    if (noisy) {
      for (int i = 0; i < 3; ++i) m.gyro[i] += sg * unit(rng);
      for (int i = 0; i < 3; ++i) m.accel[i] += sa * unit(rng);
    }
    out.push_back(m);
  }
  return out;
}

bool project(const TrajectorySample& pose, const Extrinsics& ext, const SensorConfig& cfg, const Vector3d& landmark,
             Vector2d& uv) {
  const Vector3d pc = ext.R_BC.transpose() * (pose.R.transpose() * (landmark - pose.p) - ext.p_BC);
  if (pc.z() < 0.1) return false;
  uv = pc.head<2>() / pc.z();
  return std::abs(uv.x()) * cfg.focal <= cfg.width / 2 && std::abs(uv.y()) * cfg.focal <= cfg.height / 2;
}

CameraStream synthesize_camera(const PoseProvider& pose, const std::vector<double>& stamps, double td,
                               const Extrinsics& ext, const SensorConfig& cfg, std::mt19937_64& rng, bool noisy) {
  CameraStream out;
  std::normal_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> ux(-cfg.width / 2, cfg.width / 2), uy(-cfg.height / 2, cfg.height / 2),
      depth(cfg.min_depth, cfg.max_depth);
  const double sigma = cfg.pixel_sigma();

  for (std::size_t f = 0; f < stamps.size(); ++f) {
    const auto s = pose(stamps[f] + td);
    CameraFrame frame;
    frame.stamp = stamps[f];
    std::vector<std::pair<int, Vector2d>> visible;
    Vector2d uv;
    for (std::size_t l = 0; l < out.landmarks.size(); ++l) {
      if (project(s, ext, cfg, out.landmarks[l], uv)) visible.emplace_back(static_cast<int>(l), uv);
    }
    while (static_cast<int>(visible.size()) < cfg.min_visible) {
      // Back-project a random pixel at a random depth.
      const Vector3d ray(ux(rng) / cfg.focal * 0.95, uy(rng) / cfg.focal * 0.95, 1.0);
      const Vector3d pc = depth(rng) * ray;
      const Vector3d pw = s.p + s.R * (ext.p_BC + ext.R_BC * pc);
      out.landmarks.push_back(pw);
      if (project(s, ext, cfg, pw, uv)) visible.emplace_back(static_cast<int>(out.landmarks.size() - 1), uv);
    }
    if (visible.empty()) throw NoVisibleLandmarks(f);
    for (auto& [id, z] : visible) {
      if (noisy) z += sigma * Vector2d(unit(rng), unit(rng));
      frame.obs.push_back({id, z});
    }
    out.frames.push_back(std::move(frame));
  }
  return out;
}

}  // namespace noct::sim
