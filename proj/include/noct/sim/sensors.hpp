#pragma once

#include <functional>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "noct/errors.hpp"
#include "noct/sim/trajectory.hpp"

namespace noct::sim {

class NoVisibleLandmarks : public Error {
 public:
  explicit NoVisibleLandmarks(std::size_t frame)
      : Error("no landmark visible in camera frame " + std::to_string(frame)), frame_(frame) {}
  std::size_t frame() const { return frame_; }

 private:
  std::size_t frame_;
};

struct SensorConfig {
  int imu_rate = 400;
  int cam_rate = 10;
  double gyro_noise = 1.7e-4;  // rad/s/sqrt(Hz)
  double accel_noise = 2e-3;   // m/s^2/sqrt(Hz)
  double pixel_noise = 1.5;    // px
  double focal = 460;
  double width = 752;
  double height = 480;
  double min_depth = 2;
  double max_depth = 8;
  /// New landmarks are spawned in view until at least this many are visible.
  int min_visible = 40;

  double pixel_sigma() const { return pixel_noise / focal; }
};

/// Camera pose in the body frame: p_BC is the camera origin, R_BC its axes.
struct Extrinsics {
  Eigen::Matrix3d R_BC = Eigen::Matrix3d::Identity();
  Eigen::Vector3d p_BC = Eigen::Vector3d::Zero();
};

/// Side-looking camera with a slight downward tilt.
Extrinsics default_extrinsics();

struct ImuSample {
  double t = 0;
  Eigen::Vector3d gyro = Eigen::Vector3d::Zero();
  Eigen::Vector3d accel = Eigen::Vector3d::Zero();
};

struct Observation {
  int landmark = 0;
  Eigen::Vector2d uv = Eigen::Vector2d::Zero();  // normalized image coordinates
};

struct CameraFrame {
  double stamp = 0;  // camera clock; captured at IMU time stamp + t_d
  std::vector<Observation> obs;
};

/// Pose of the body at a given IMU-clock time.
using PoseProvider = std::function<TrajectorySample(double)>;

/// IMU samples on [0, duration] with constant biases and white noise.
std::vector<ImuSample> synthesize_imu(const Trajectory& traj, const SensorConfig& cfg, const Eigen::Vector3d& bg,
                                      const Eigen::Vector3d& ba, double duration, std::mt19937_64& rng,
                                      bool noisy = true);

struct CameraStream {
  std::vector<CameraFrame> frames;
  std::vector<Eigen::Vector3d> landmarks;  // world positions, indexed by Observation::landmark
};

/// Projects landmarks at each stamp, spawning new ones in the view frustum
/// so at least cfg.min_visible are visible.
CameraStream synthesize_camera(const PoseProvider& pose, const std::vector<double>& stamps, double td,
                               const Extrinsics& ext, const SensorConfig& cfg, std::mt19937_64& rng,
                               bool noisy = true);

/// Normalized projection of a world point; false when behind the camera or
/// outside the image.
bool project(const TrajectorySample& pose, const Extrinsics& ext, const SensorConfig& cfg,
             const Eigen::Vector3d& landmark, Eigen::Vector2d& uv);

}  // namespace noct::sim
