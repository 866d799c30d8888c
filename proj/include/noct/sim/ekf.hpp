#pragma once

#include <functional>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "noct/errors.hpp"
#include "noct/sim/sensors.hpp"

namespace noct::sim {

class FilterDiverged : public Error {
 public:
  using Error::Error;
};

class SingularUpdate : public Error {
 public:
  using Error::Error;
};

struct FilterConfig {
  bool estimate_extrinsics = true;
  double gyro_noise = 1.7e-4;
  double accel_noise = 2e-3;
  double pixel_sigma = 1.5 / 460;
  /// Landmarks kept in the state.
  int max_landmarks = 25;
  /// Cloned camera poses kept for delayed initialization and track updates.
  int window = 10;
  /// Views needed before a track is used.
  int min_track = 4;
  /// Minimum angle between first and last bearing of a track, rad.
  double min_parallax = 0.02;
  /// Normal quantile of the chi-square gate applied per feature.
  double gate_z = 3.0;
};

/// Supplies the true trajectory so that Jacobians can be evaluated at the
/// ground truth instead of at first estimates.
struct LinearizationOracle {
  PoseProvider pose;                             // body state at IMU time
  std::function<Eigen::Vector3d(int)> landmark;  // world position by id
  Extrinsics ext;
  double td = 0;
};

struct NominalState {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();  // R_WB
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  Eigen::Vector3d bg = Eigen::Vector3d::Zero();
  Eigen::Vector3d ba = Eigen::Vector3d::Zero();
  Extrinsics ext;
  double td = 0;
};

/// Calls fn(dt, gyro, accel) for consecutive pieces of [from, to], each
/// inside one IMU interval and using the mean of its two end samples.
template <typename Fn>
void for_each_imu_segment(const std::vector<ImuSample>& imu, double from, double to, Fn&& fn);

/// Advances the nominal state over one segment with bias-corrected readings.
void integrate_step(NominalState& x, const Eigen::Vector3d& gyro, const Eigen::Vector3d& accel, double dt);

/// Noise-free propagation of the nominal state over [from, to].
void propagate_nominal(NominalState& x, const std::vector<ImuSample>& imu, double from, double to);

/// Chi-square quantile approximation (Wilson-Hilferty) for `dof` degrees of
/// freedom at normal quantile z.
double chi2_quantile(int dof, double z);

struct UpdateStats {
  int used = 0;         // landmark measurements applied
  int tracks = 0;       // completed tracks applied without a landmark
  int initialized = 0;  // landmarks added
  int rejected = 0;     // measurements or tracks failing the gate
  double max_abs_innovation = 0;
};

/// Error-state EKF with landmarks in the state and a window of cloned poses.
///
/// Error layout: theta(3, world frame) p(3) v(3) bg(3) ba(3), then p_BC(3)
/// theta_BC(3, camera frame) when extrinsics are estimated, then t_d, then
/// 6 per clone (theta, p), then 3 per landmark (world position). Jacobians of
/// the motion and camera models use first estimates of position, velocity,
/// clones and landmarks, or the ground truth when an oracle is set.
class Ekf {
 public:
  Ekf(const FilterConfig& cfg, const NominalState& x0, double t0, const Eigen::MatrixXd& p0);

  /// Evaluates all Jacobians at the ground truth from now on.
  void set_oracle(LinearizationOracle oracle);

  /// Propagates state and covariance to IMU time t (no-op if t is not ahead).
  void propagate(const std::vector<ImuSample>& imu, double t);
  /// Processes one camera frame captured at the current filter time.
  UpdateStats update(const CameraFrame& frame);

  double time() const { return t_; }
  const NominalState& state() const { return x_; }
  const Eigen::MatrixXd& covariance() const { return P_; }
  std::size_t landmark_count() const { return landmarks_.size(); }
  std::size_t clone_count() const { return clones_.size(); }

  static constexpr int kTheta = 0, kP = 3, kV = 6, kBg = 9, kBa = 12, kCore = 15;
  int ext_index() const { return cfg_.estimate_extrinsics ? kCore : -1; }
  int td_index() const { return cfg_.estimate_extrinsics ? kCore + 6 : kCore; }

  /// Smallest covariance eigenvalue found when flooring was needed, else 0.
  double min_eigenvalue() const { return min_eig_; }

 private:
  struct Clone {
    int id;
    Eigen::Matrix3d R;
    Eigen::Vector3d p;
    Eigen::Matrix3d R_fej;
    Eigen::Vector3d p_fej;
  };
  struct Landmark {
    int id;
    Eigen::Vector3d p;
    Eigen::Vector3d p_fej;
  };
  struct Projection {
    bool ok = false;
    Eigen::Vector2d uv;
    Eigen::Matrix<double, 2, 3> d_theta, d_p, d_l, d_pbc, d_phi;
  };
  using Track = std::vector<std::pair<int, Eigen::Vector2d>>;  // (clone id, uv)

  int clone_index(std::size_t i) const { return td_index() + 1 + 6 * static_cast<int>(i); }
  int landmark_index(std::size_t k) const { return clone_index(clones_.size()) + 3 * static_cast<int>(k); }
  int find_clone(int id) const;

  Projection project(const Eigen::Matrix3d& R, const Eigen::Vector3d& p, const Eigen::Vector3d& l,
                     const Extrinsics& ext) const;
  const Extrinsics& linearization_ext() const { return oracle_ ? oracle_->ext : x_.ext; }
  /// Adds k states y = J * x + n with n ~ N(0, noise) at index `at`.
  void insert_states(int at, const Eigen::MatrixXd& J, const Eigen::MatrixXd& noise);
  void remove_states(int at, int count);
  void apply_correction(const Eigen::VectorXd& dx);
  void kalman_update(const Eigen::MatrixXd& H, const Eigen::VectorXd& r);
  void condition_covariance();

  void add_clone(int id);
  void update_landmarks(const std::map<int, Eigen::Vector2d>& seen, UpdateStats& stats);
  bool triangulate(const Track& track, Eigen::Vector3d& point) const;
  /// Residual and Jacobians of a track with respect to the state (Hx) and to
  /// its point (Hf); false if the track is unusable.
  bool track_system(int id, const Track& track, Eigen::Vector3d& point, Eigen::MatrixXd& Hx, Eigen::MatrixXd& Hf,
                    Eigen::VectorXd& r) const;
  void process_tracks(const std::map<int, Eigen::Vector2d>& seen, UpdateStats& stats);

  FilterConfig cfg_;
  NominalState x_;
  double t_;
  Eigen::MatrixXd P_;
  Eigen::Vector3d omega_ = Eigen::Vector3d::Zero();  // bias-corrected body rate at t_
  Eigen::Vector3d p_fej_, v_fej_;                    // propagated values at t_
  std::vector<Clone> clones_;
  std::vector<Landmark> landmarks_;
  std::map<int, Track> tracks_;
  int next_clone_ = 0;
  std::optional<LinearizationOracle> oracle_;
  double min_eig_ = 0;
};

// ---------------------------------------------------------------------------

template <typename Fn>
void for_each_imu_segment(const std::vector<ImuSample>& imu, double from, double to, Fn&& fn) {
  if (imu.size() < 2 || to <= from) return;
  const double dt = imu[1].t - imu[0].t;
  double t = from;
  while (t < to) {
    auto k = static_cast<std::size_t>((t - imu.front().t) / dt + 1e-9);
    if (k + 1 >= imu.size()) throw Error("IMU data ends before the requested time");
    const double end = std::min(to, imu[k + 1].t);
    const double h = end - t;
    if (h > 0) fn(h, 0.5 * (imu[k].gyro + imu[k + 1].gyro), 0.5 * (imu[k].accel + imu[k + 1].accel));
    t = end;
    if (h <= 0) t = imu[k + 1].t;  // rounding put us at the boundary
  }
}

}  // namespace noct::sim
