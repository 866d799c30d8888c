#include "noct/sim/ekf.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "so3.hpp"

namespace noct::sim {

using Eigen::Matrix3d;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::Vector3d;
using Eigen::VectorXd;

void integrate_step(NominalState& x, const Vector3d& gyro, const Vector3d& accel, double dt) {
  const Vector3d w = gyro - x.bg;
  const Vector3d a = accel - x.ba;
  const Matrix3d r_mid = x.R * so3_exp(0.5 * dt * w);
  const Vector3d acc = r_mid * a + gravity_world();
  x.p += x.v * dt + 0.5 * acc * dt * dt;
  x.v += acc * dt;
  x.R = x.R * so3_exp(dt * w);
}

void propagate_nominal(NominalState& x, const std::vector<ImuSample>& imu, double from, double to) {
  for_each_imu_segment(imu, from, to,
                       [&](double dt, const Vector3d& g, const Vector3d& a) { integrate_step(x, g, a, dt); });
  x.R = normalized(x.R);
}

double chi2_quantile(int dof, double z) {
  const double k = dof;
  const double c = 2.0 / (9.0 * k);
  return k * std::pow(1.0 - c + z * std::sqrt(c), 3);
}

Ekf::Ekf(const FilterConfig& cfg, const NominalState& x0, double t0, const MatrixXd& p0)
    : cfg_(cfg), x_(x0), t_(t0), P_(p0), p_fej_(x0.p), v_fej_(x0.v) {
  if (P_.rows() != td_index() + 1 || P_.cols() != P_.rows()) throw Error("initial covariance has the wrong size");
  if (cfg_.window < 2 || cfg_.min_track < 2 || cfg_.min_track > cfg_.window) {
    throw Error("window and track length settings are inconsistent");
  }
}

void Ekf::set_oracle(LinearizationOracle oracle) { oracle_ = std::move(oracle); }

void Ekf::propagate(const std::vector<ImuSample>& imu, double t) {
  if (t <= t_) return;
  using Mat15 = Eigen::Matrix<double, kCore, kCore>;
  Mat15 phi_acc = Mat15::Identity();
  Mat15 q_acc = Mat15::Zero();
  const double sg2 = cfg_.gyro_noise * cfg_.gyro_noise, sa2 = cfg_.accel_noise * cfg_.accel_noise;
  const double span = t - t_;
  const Vector3d g = gravity_world();
  double tc = t_;

  for_each_imu_segment(imu, t_, t, [&](double dt, const Vector3d& gyro, const Vector3d& accel) {
    const Vector3d w = gyro - x_.bg;
    const Vector3d a = accel - x_.ba;
    Matrix3d r_mid = x_.R * so3_exp(0.5 * dt * w);
    Vector3d f = r_mid * a;
    if (oracle_) {
      const TrajectorySample s = oracle_->pose(tc + 0.5 * dt);
      r_mid = s.R;
      f = s.a - g;
    }
    tc += dt;
    Mat15 phi = Mat15::Identity();
    phi.block<3, 3>(kTheta, kBg) = -r_mid * dt;
    phi.block<3, 3>(kV, kTheta) = -skew(f) * dt;
    phi.block<3, 3>(kV, kBa) = -r_mid * dt;
    phi.block<3, 3>(kP, kV) = dt * Matrix3d::Identity();
    phi.block<3, 3>(kP, kTheta) = -0.5 * skew(f) * dt * dt;
    phi.block<3, 3>(kP, kBa) = -0.5 * r_mid * dt * dt;
    Mat15 q = Mat15::Zero();
    q.block<3, 3>(kTheta, kTheta) = sg2 * dt * Matrix3d::Identity();
    q.block<3, 3>(kV, kV) = sa2 * dt * Matrix3d::Identity();
    phi_acc = phi * phi_acc;
    q_acc = phi * q_acc * phi.transpose() + q;
    integrate_step(x_, gyro, accel, dt);
    omega_ = w;
  });
  x_.R = normalized(x_.R);
  t_ = t;

  // Attitude coupling from first estimates, so that propagation and camera
  // Jacobians share one linearization point.
  if (!oracle_) {
    phi_acc.block<3, 3>(kV, kTheta) = -skew(x_.v - v_fej_ - g * span);
    phi_acc.block<3, 3>(kP, kTheta) = -skew(x_.p - p_fej_ - v_fej_ * span - 0.5 * g * span * span);
  }
  p_fej_ = x_.p;
  v_fej_ = x_.v;

  const auto rest = P_.rows() - kCore;
  P_.topLeftCorner<kCore, kCore>() = phi_acc * P_.topLeftCorner<kCore, kCore>() * phi_acc.transpose() + q_acc;
  if (rest > 0) {
    P_.topRightCorner(kCore, rest) = phi_acc * P_.topRightCorner(kCore, rest);
    P_.bottomLeftCorner(rest, kCore) = P_.topRightCorner(kCore, rest).transpose();
  }
}

int Ekf::find_clone(int id) const {
  for (std::size_t i = 0; i < clones_.size(); ++i) {
    if (clones_[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

Ekf::Projection Ekf::project(const Matrix3d& R, const Vector3d& p, const Vector3d& l, const Extrinsics& ext) const {
  Projection out;
  const Matrix3d& Rbc = ext.R_BC;
  const Vector3d q = R.transpose() * (l - p);
  const Vector3d pc = Rbc.transpose() * (q - ext.p_BC);
  if (pc.z() < 0.05) return out;
  out.ok = true;
  out.uv = pc.head<2>() / pc.z();
  Eigen::Matrix<double, 2, 3> jp;
  jp << 1 / pc.z(), 0, -pc.x() / (pc.z() * pc.z()), 0, 1 / pc.z(), -pc.y() / (pc.z() * pc.z());
  const Eigen::Matrix<double, 2, 3> jq = jp * Rbc.transpose();
  out.d_l = jq * R.transpose();
  out.d_p = -out.d_l;
  out.d_theta = out.d_l * skew(l - p);
  out.d_pbc = -jq;
  out.d_phi = jp * skew(pc);
  return out;
}

void Ekf::insert_states(int at, const MatrixXd& J, const MatrixXd& noise) {
  const auto n = P_.rows();
  const auto k = J.rows();
  std::vector<Eigen::Index> old_to_new(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) old_to_new[static_cast<std::size_t>(i)] = i < at ? i : i + k;
  const MatrixXd PJt = P_ * J.transpose();
  MatrixXd grown(n + k, n + k);
  grown(old_to_new, old_to_new) = P_;
  grown(old_to_new, Eigen::seqN(at, k)) = PJt;
  grown(Eigen::seqN(at, k), old_to_new) = PJt.transpose();
  grown(Eigen::seqN(at, k), Eigen::seqN(at, k)) = J * PJt + noise;
  P_ = std::move(grown);
}

void Ekf::remove_states(int at, int count) {
  const auto n = P_.rows();
  std::vector<Eigen::Index> keep;
  keep.reserve(static_cast<std::size_t>(n - count));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i < at || i >= at + count) keep.push_back(i);
  }
  P_ = P_(keep, keep).eval();
}

void Ekf::apply_correction(const VectorXd& dx) {
  x_.R = normalized(so3_exp(dx.segment<3>(kTheta)) * x_.R);
  x_.p += dx.segment<3>(kP);
  x_.v += dx.segment<3>(kV);
  x_.bg += dx.segment<3>(kBg);
  x_.ba += dx.segment<3>(kBa);
  if (cfg_.estimate_extrinsics) {
    const int e = ext_index();
    x_.ext.p_BC += dx.segment<3>(e);
    x_.ext.R_BC = normalized(x_.ext.R_BC * so3_exp(dx.segment<3>(e + 3)));
  }
  x_.td += dx(td_index());
  for (std::size_t i = 0; i < clones_.size(); ++i) {
    const int c = clone_index(i);
    clones_[i].R = normalized(so3_exp(dx.segment<3>(c)) * clones_[i].R);
    clones_[i].p += dx.segment<3>(c + 3);
  }
  for (std::size_t k = 0; k < landmarks_.size(); ++k) landmarks_[k].p += dx.segment<3>(landmark_index(k));
}

void Ekf::kalman_update(const MatrixXd& H, const VectorXd& r) {
  const double s2 = cfg_.pixel_sigma * cfg_.pixel_sigma;
  const MatrixXd PHt = P_ * H.transpose();
  MatrixXd S = H * PHt;
  S.diagonal().array() += s2;
  Eigen::LDLT<MatrixXd> ldlt(S);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) throw SingularUpdate("innovation covariance is singular");
  const MatrixXd K = ldlt.solve(PHt.transpose()).transpose();
  apply_correction(K * r);
  MatrixXd ikh = -K * H;
  ikh.diagonal().array() += 1.0;
  P_ = ikh * P_ * ikh.transpose() + s2 * K * K.transpose();
  condition_covariance();
}

void Ekf::condition_covariance() {
  P_ = 0.5 * (P_ + P_.transpose()).eval();
  MatrixXd jittered = P_;
  jittered.diagonal().array() += 1e-12;
  Eigen::LLT<MatrixXd> llt(jittered);
  if (llt.info() == Eigen::Success) return;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(P_);
  const double lo = es.eigenvalues().minCoeff();
  min_eig_ = std::min(min_eig_, lo);
  if (lo < 0) {
    const VectorXd ev = es.eigenvalues().cwiseMax(0.0);
    P_ = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  }
}

void Ekf::add_clone(int id) {
  const auto n = P_.rows();
  MatrixXd J = MatrixXd::Zero(6, n);
  J.block<3, 3>(0, kTheta).setIdentity();
  J.block<3, 3>(3, kP).setIdentity();
  // The frame was captured at stamp + t_d: a time offset error moves the pose
  // along the current motion.
  Clone c{id, x_.R, x_.p, x_.R, x_.p};
  Vector3d w = x_.R * omega_, v = x_.v;
  if (oracle_) {
    const TrajectorySample s = oracle_->pose(t_ + oracle_->td - x_.td);
    c.R_fej = s.R;
    c.p_fej = s.p;
    w = s.R * s.omega;
    v = s.v;
  }
  J.block<3, 1>(0, td_index()) = w;
  J.block<3, 1>(3, td_index()) = v;
  insert_states(clone_index(clones_.size()), J, MatrixXd::Zero(6, 6));
  clones_.push_back(c);
}

void Ekf::update_landmarks(const std::map<int, Vector2d>& seen, UpdateStats& stats) {
  const auto n = P_.rows();
  const std::size_t ci = clones_.size() - 1;
  const Clone& c = clones_[ci];
  const double s2 = cfg_.pixel_sigma * cfg_.pixel_sigma;
  const double gate = chi2_quantile(2, cfg_.gate_z);

  std::vector<std::size_t> drop;
  std::vector<Eigen::Matrix<double, 2, Eigen::Dynamic>> rows;
  std::vector<Vector2d> residuals;
  for (std::size_t k = 0; k < landmarks_.size(); ++k) {
    const auto it = seen.find(landmarks_[k].id);
    if (it == seen.end()) {
      drop.push_back(k);
      continue;
    }
    const Projection cur = project(c.R, c.p, landmarks_[k].p, x_.ext);
    const Projection lin = project(c.R_fej, c.p_fej, landmarks_[k].p_fej, linearization_ext());
    if (!cur.ok || !lin.ok) {
      drop.push_back(k);
      continue;
    }
    Eigen::Matrix<double, 2, Eigen::Dynamic> h = Eigen::Matrix<double, 2, Eigen::Dynamic>::Zero(2, n);
    h.block<2, 3>(0, clone_index(ci)) = lin.d_theta;
    h.block<2, 3>(0, clone_index(ci) + 3) = lin.d_p;
    if (cfg_.estimate_extrinsics) {
      h.block<2, 3>(0, ext_index()) = lin.d_pbc;
      h.block<2, 3>(0, ext_index() + 3) = lin.d_phi;
    }
    h.block<2, 3>(0, landmark_index(k)) = lin.d_l;
    const Vector2d r = it->second - cur.uv;
    stats.max_abs_innovation = std::max(stats.max_abs_innovation, r.cwiseAbs().maxCoeff());
    const Eigen::Matrix2d s = h * P_ * h.transpose() + s2 * Eigen::Matrix2d::Identity();
    if (r.dot(s.ldlt().solve(r)) > gate) {
      ++stats.rejected;
      drop.push_back(k);
      continue;
    }
    rows.push_back(std::move(h));
    residuals.push_back(r);
  }

  if (!rows.empty()) {
    const auto m = static_cast<Eigen::Index>(2 * rows.size());
    MatrixXd H(m, n);
    VectorXd r(m);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      H.middleRows(static_cast<Eigen::Index>(2 * i), 2) = rows[i];
      r.segment<2>(static_cast<Eigen::Index>(2 * i)) = residuals[i];
    }
    kalman_update(H, r);
    stats.used = static_cast<int>(rows.size());
  }
  std::sort(drop.rbegin(), drop.rend());
  for (auto k : drop) {
    remove_states(landmark_index(k), 3);
    landmarks_.erase(landmarks_.begin() + static_cast<std::ptrdiff_t>(k));
  }
}

bool Ekf::triangulate(const Track& track, Vector3d& point) const {
  struct View {
    Vector2d uv;
    Matrix3d R_WC;
    Vector3d p_WC;
  };
  std::vector<View> views;
  for (const auto& [id, uv] : track) {
    const int ci = find_clone(id);
    if (ci < 0) return false;
    const Clone& c = clones_[static_cast<std::size_t>(ci)];
    views.push_back({uv, c.R * x_.ext.R_BC, c.p + c.R * x_.ext.p_BC});
  }
  const Vector3d b0 = views.front().R_WC * Vector3d(views.front().uv.x(), views.front().uv.y(), 1);
  const Vector3d b1 = views.back().R_WC * Vector3d(views.back().uv.x(), views.back().uv.y(), 1);
  if (std::atan2(b0.cross(b1).norm(), b0.dot(b1)) < cfg_.min_parallax) return false;

  Matrix3d A = Matrix3d::Zero();
  Vector3d y = Vector3d::Zero();
  for (const auto& v : views) {
    const Vector3d b = (v.R_WC * Vector3d(v.uv.x(), v.uv.y(), 1)).normalized();
    const Matrix3d proj = Matrix3d::Identity() - b * b.transpose();
    A += proj;
    y += proj * v.p_WC;
  }
  Eigen::SelfAdjointEigenSolver<Matrix3d> es(A);
  if (es.eigenvalues().minCoeff() < 1e-6) return false;
  point = A.ldlt().solve(y);

  // Gauss-Newton on normalized reprojection error.
  for (int it = 0; it < 5; ++it) {
    Matrix3d jtj = Matrix3d::Zero();
    Vector3d jtr = Vector3d::Zero();
    for (const auto& v : views) {
      const Vector3d pc = v.R_WC.transpose() * (point - v.p_WC);
      if (pc.z() < 0.1) return false;
      Eigen::Matrix<double, 2, 3> jp;
      jp << 1 / pc.z(), 0, -pc.x() / (pc.z() * pc.z()), 0, 1 / pc.z(), -pc.y() / (pc.z() * pc.z());
      const Eigen::Matrix<double, 2, 3> j = jp * v.R_WC.transpose();
      const Vector2d r = v.uv - pc.head<2>() / pc.z();
      jtj += j.transpose() * j;
      jtr += j.transpose() * r;
    }
    point += jtj.ldlt().solve(jtr);
  }
  for (const auto& v : views) {
    if ((v.R_WC.transpose() * (point - v.p_WC)).z() < 0.2) return false;
  }
  return true;
}

bool Ekf::track_system(int id, const Track& track, Vector3d& point, MatrixXd& Hx, MatrixXd& Hf, VectorXd& r) const {
  if (!triangulate(track, point)) return false;
  const Vector3d lin_point = oracle_ ? oracle_->landmark(id) : point;
  const auto n = P_.rows();
  const auto m = static_cast<Eigen::Index>(2 * track.size());
  Hx = MatrixXd::Zero(m, n);
  Hf.resize(m, 3);
  r.resize(m);
  for (std::size_t j = 0; j < track.size(); ++j) {
    const auto ci = static_cast<std::size_t>(find_clone(track[j].first));
    const Clone& c = clones_[ci];
    const Projection cur = project(c.R, c.p, point, x_.ext);
    const Projection lin = project(c.R_fej, c.p_fej, lin_point, linearization_ext());
    if (!cur.ok || !lin.ok) return false;
    const auto row = static_cast<Eigen::Index>(2 * j);
    r.segment<2>(row) = track[j].second - cur.uv;
    Hx.block<2, 3>(row, clone_index(ci)) = lin.d_theta;
    Hx.block<2, 3>(row, clone_index(ci) + 3) = lin.d_p;
    if (cfg_.estimate_extrinsics) {
      Hx.block<2, 3>(row, ext_index()) = lin.d_pbc;
      Hx.block<2, 3>(row, ext_index() + 3) = lin.d_phi;
    }
    Hf.block<2, 3>(row, 0) = lin.d_l;
  }
  return true;
}

void Ekf::process_tracks(const std::map<int, Vector2d>& seen, UpdateStats& stats) {
  const int newest = clones_.back().id;
  std::set<int> in_state;
  for (const auto& l : landmarks_) in_state.insert(l.id);
  for (const auto& [id, uv] : seen) {
    if (!in_state.count(id)) tracks_[id].emplace_back(newest, uv);
  }

  const bool full = static_cast<int>(clones_.size()) > cfg_.window;
  const int oldest = clones_.front().id;
  const auto min_len = static_cast<std::size_t>(cfg_.min_track);

  // Seen tracks become landmarks while there is room, longest first; lost
  // tracks and tracks about to lose their oldest view update the filter.
  std::vector<std::pair<std::size_t, int>> ready;
  std::vector<int> spent;
  for (const auto& [id, track] : tracks_) {
    const bool lost = track.back().first != newest;
    if (!lost && track.size() >= min_len) ready.emplace_back(track.size(), id);
  }
  std::sort(ready.begin(), ready.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  const auto slots = static_cast<std::size_t>(std::max(0, cfg_.max_landmarks - static_cast<int>(landmarks_.size())));
  std::vector<int> to_init;
  for (std::size_t i = 0; i < ready.size() && i < slots; ++i) to_init.push_back(ready[i].second);
  for (const auto& [id, track] : tracks_) {
    if (std::find(to_init.begin(), to_init.end(), id) != to_init.end()) continue;
    const bool lost = track.back().first != newest;
    const bool expiring = full && track.front().first == oldest;
    if ((lost || expiring) && track.size() >= min_len) spent.push_back(id);
  }

  const double s2 = cfg_.pixel_sigma * cfg_.pixel_sigma;
  auto gate_ok = [&](const MatrixXd& H, const VectorXd& r) {
    MatrixXd S = H * P_ * H.transpose();
    S.diagonal().array() += s2;
    return r.dot(S.ldlt().solve(r)) <= chi2_quantile(static_cast<int>(r.size()), cfg_.gate_z);
  };

  // Completed tracks: project out the point and update.
  std::vector<MatrixXd> blocks;
  std::vector<VectorXd> res;
  Eigen::Index total = 0;
  for (int id : spent) {
    Vector3d point;
    MatrixXd Hx, Hf;
    VectorXd r;
    if (!track_system(id, tracks_.at(id), point, Hx, Hf, r)) continue;
    stats.max_abs_innovation = std::max(stats.max_abs_innovation, r.cwiseAbs().maxCoeff());
    Eigen::HouseholderQR<MatrixXd> qr(Hf);
    const MatrixXd Q = qr.householderQ();
    const MatrixXd Q2 = Q.rightCols(Hf.rows() - 3);
    MatrixXd Ho = Q2.transpose() * Hx;
    VectorXd ro = Q2.transpose() * r;
    if (!gate_ok(Ho, ro)) {
      ++stats.rejected;
      continue;
    }
    total += Ho.rows();
    blocks.push_back(std::move(Ho));
    res.push_back(std::move(ro));
    ++stats.tracks;
  }
  for (int id : spent) tracks_.erase(id);
  if (total > 0) {
    MatrixXd H(total, P_.rows());
    VectorXd r(total);
    Eigen::Index row = 0;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      H.middleRows(row, blocks[i].rows()) = blocks[i];
      r.segment(row, res[i].size()) = res[i];
      row += blocks[i].rows();
    }
    kalman_update(H, r);
  }

  // New landmarks: the part of the track along the point's Jacobian fixes
  // the point, the rest updates the state.
  for (int id : to_init) {
    Vector3d point;
    MatrixXd Hx, Hf;
    VectorXd r;
    if (!track_system(id, tracks_.at(id), point, Hx, Hf, r)) continue;
    stats.max_abs_innovation = std::max(stats.max_abs_innovation, r.cwiseAbs().maxCoeff());
    Eigen::HouseholderQR<MatrixXd> qr(Hf);
    const MatrixXd Q = qr.householderQ();
    const Matrix3d R1 = qr.matrixQR().topLeftCorner<3, 3>().triangularView<Eigen::Upper>();
    if (std::abs(R1.determinant()) < 1e-12) continue;
    const MatrixXd Q1 = Q.leftCols(3), Q2 = Q.rightCols(Hf.rows() - 3);
    const MatrixXd Hx1 = Q1.transpose() * Hx, Hx2 = Q2.transpose() * Hx;
    const Vector3d r1 = Q1.transpose() * r;
    const VectorXd r2 = Q2.transpose() * r;
    if (!gate_ok(Hx2, r2)) {
      ++stats.rejected;
      tracks_.erase(id);
      continue;
    }
    const Matrix3d R1inv = R1.inverse();
    const auto n = P_.rows();
    insert_states(static_cast<int>(n), -R1inv * Hx1, s2 * R1inv * R1inv.transpose());
    const Vector3d p = point + R1inv * r1;
    landmarks_.push_back({id, p, oracle_ ? oracle_->landmark(id) : p});
    tracks_.erase(id);
    ++stats.initialized;
    MatrixXd H2 = MatrixXd::Zero(Hx2.rows(), n + 3);
    H2.leftCols(n) = Hx2;
    kalman_update(H2, r2);
  }

  // Drop what is left of lost tracks and views of the clone leaving the window.
  for (auto it = tracks_.begin(); it != tracks_.end();) {
    auto& track = it->second;
    if (track.back().first != newest) {
      it = tracks_.erase(it);
      continue;
    }
    if (full) {
      track.erase(std::remove_if(track.begin(), track.end(), [&](const auto& o) { return o.first == oldest; }),
                  track.end());
    }
    it = track.empty() ? tracks_.erase(it) : std::next(it);
  }
  if (full) {
    remove_states(clone_index(0), 6);
    clones_.erase(clones_.begin());
  }
}

UpdateStats Ekf::update(const CameraFrame& frame) {
  UpdateStats stats;
  std::map<int, Vector2d> seen;
  for (const auto& o : frame.obs) seen.emplace(o.landmark, o.uv);
  add_clone(next_clone_++);
  update_landmarks(seen, stats);
  process_tracks(seen, stats);
  return stats;
}

}  // namespace noct::sim
