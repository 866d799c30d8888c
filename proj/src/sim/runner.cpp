#include "noct/sim/runner.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <random>

#include "json.hpp"
#include "so3.hpp"

namespace noct::sim {

using Eigen::Matrix3d;
using Eigen::MatrixXd;
using Eigen::Vector3d;

namespace {

struct ScenarioPreset {
  const char* name;
  TrajectoryKind kind;
  bool extrinsics;
};

const ScenarioPreset kPresets[] = {
    {"slope_line", TrajectoryKind::kSlopeLine, true},
    {"slope_lemniscate", TrajectoryKind::kSlopeLemniscate, true},
    {"slope_circle", TrajectoryKind::kSlopeCircle, true},
    {"case_a", TrajectoryKind::kCircleConstVel, false},
    {"case_b", TrajectoryKind::kCylinderConstAccel, false},
    {"case_c", TrajectoryKind::kCircleVaryingRate, false},
    {"case_d", TrajectoryKind::kCylinderVaryingAccel, false},
    {"general_3d", TrajectoryKind::kGeneral3D, true},
};

/// Ground truth produced by integrating noise-free IMU data with the filter's
/// own integrator, so the filter model is exact. Queries must not go back in time.
class DiscreteTruth {
 public:
  DiscreteTruth(const std::vector<ImuSample>& imu, NominalState x0) : imu_(imu), x_(std::move(x0)) {}

  TrajectorySample operator()(double t) {
    if (t < t_) throw Error("discrete truth queried backwards in time");
    propagate_nominal(x_, imu_, t_, t);
    t_ = t;
    TrajectorySample s;
    s.t = t;
    s.p = x_.p;
    s.v = x_.v;
    s.R = x_.R;
    return s;
  }

 private:
  const std::vector<ImuSample>& imu_;
  NominalState x_;
  double t_ = 0;
};

std::vector<std::string> variable_names(bool extrinsics) {
  std::vector<std::string> names;
  for (const char* stem : {"theta", "p", "v", "bg", "ba"}) {
    for (const char* axis : {"x", "y", "z"}) names.push_back(std::string(stem) + "_" + axis);
  }
  if (extrinsics) {
    for (const char* stem : {"p_bc", "theta_bc"}) {
      for (const char* axis : {"x", "y", "z"}) names.push_back(std::string(stem) + "_" + axis);
    }
  }
  names.emplace_back("td");
  return names;
}

/// Error (truth minus estimate) and 3-sigma of every reported variable.
void record(RunResult& res, const Ekf& ekf, const TrajectorySample& truth, const Vector3d& bg, const Vector3d& ba,
            const Extrinsics& ext, double td, bool extrinsics) {
  const auto& x = ekf.state();
  const auto& P = ekf.covariance();
  std::vector<double> err, var;

  const Vector3d dth = so3_log(truth.R * x.R.transpose());
  const Matrix3d pth = P.block<3, 3>(Ekf::kTheta, Ekf::kTheta);
  for (int i = 0; i < 3; ++i) {
    err.push_back(dth[i]);
    var.push_back(pth(i, i));
  }
  auto block = [&](const Vector3d& e, int idx) {
    for (int i = 0; i < 3; ++i) {
      err.push_back(e[i]);
      var.push_back(P(idx + i, idx + i));
    }
  };
  block(truth.p - x.p, Ekf::kP);
  block(truth.v - x.v, Ekf::kV);
  block(bg - x.bg, Ekf::kBg);
  block(ba - x.ba, Ekf::kBa);
  if (extrinsics) {
    block(ext.p_BC - x.ext.p_BC, ekf.ext_index());
    block(so3_log(x.ext.R_BC.transpose() * ext.R_BC), ekf.ext_index() + 3);
  }
  err.push_back(td - x.td);
  var.push_back(P(ekf.td_index(), ekf.td_index()));

  for (std::size_t i = 0; i < res.series.size(); ++i) {
    res.series[i].error.push_back(err[i]);
    res.series[i].sigma3.push_back(3.0 * std::sqrt(std::max(var[i], 0.0)));
  }
}

/// Normalized error squared over the judged, non-gauge core directions.
double core_nees(const RunResult& res, const Ekf& ekf) {
  const std::size_t last = res.times.size() - 1;
  double acc = 0;
  const auto& P = ekf.covariance();
  for (int i = Ekf::kV; i < Ekf::kCore; ++i) {
    const double e = res.series[static_cast<std::size_t>(i)].error[last];
    acc += e * e / std::max(P(i, i), 1e-300);
  }
  return acc;
}

}  // namespace

std::vector<std::string> scenario_names() {
  std::vector<std::string> out;
  for (const auto& p : kPresets) out.emplace_back(p.name);
  return out;
}

SimScenario named_scenario(std::string_view name) {
  for (const auto& p : kPresets) {
    if (name == p.name) {
      SimScenario s;
      s.name = p.name;
      s.kind = p.kind;
      s.estimate_extrinsics = p.extrinsics;
      return s;
    }
  }
  throw UnknownKind("unknown scenario '" + std::string(name) + "'");
}

const char* to_string(Linearization mode) {
  return mode == Linearization::kGroundTruth ? "truth" : "fej";
}

Linearization linearization_from_string(std::string_view name) {
  if (name == "truth") return Linearization::kGroundTruth;
  if (name == "fej") return Linearization::kFirstEstimates;
  throw Error("unknown linearization '" + std::string(name) + "', expected truth or fej");
}

const char* to_string(ConvergenceLabel label) {
  switch (label) {
    case ConvergenceLabel::kConverged:
      return "Converged";
    case ConvergenceLabel::kNonConverged:
      return "NonConverged";
    case ConvergenceLabel::kMarginal:
      return "Marginal";
  }
  return "?";
}

ConvergenceVerdict classify_convergence(const std::string& variable, const std::vector<double>& error,
                                        const std::vector<double>& sigma3, const ConvergenceThresholds& th) {
  if (error.size() < 2 || error.size() != sigma3.size()) {
    throw Error("convergence needs at least two epochs of matching error and sigma series");
  }
  ConvergenceVerdict v;
  v.variable = variable;
  v.ratio = sigma3.front() > 0 ? sigma3.back() / sigma3.front() : 1.0;
  if (v.ratio < th.converged) {
    v.label = ConvergenceLabel::kConverged;
  } else if (v.ratio > th.non_converged) {
    v.label = ConvergenceLabel::kNonConverged;
  } else {
    v.label = ConvergenceLabel::kMarginal;
  }
  std::size_t inside = 0;
  for (std::size_t i = 0; i < error.size(); ++i) {
    if (std::abs(error[i]) <= sigma3[i]) ++inside;
  }
  v.consistent = static_cast<double>(inside) >= th.consistent_fraction * static_cast<double>(error.size());
  v.final_error = error.back();
  return v;
}

const ConvergenceVerdict* RunResult::verdict(std::string_view variable) const {
  for (const auto& v : verdicts) {
    if (v.variable == variable) return &v;
  }
  return nullptr;
}

std::string RunResult::csv() const {
  std::string out = "time";
  for (const auto& s : series) out += "," + s.name + "_err," + s.name + "_3sigma";
  out += "\n";
  char buf[64];
  for (std::size_t r = 0; r < times.size(); ++r) {
    std::snprintf(buf, sizeof buf, "%.3f", times[r]);
    out += buf;
    for (const auto& s : series) {
      std::snprintf(buf, sizeof buf, ",%.9g,%.9g", s.error[r], s.sigma3[r]);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

RunResult run_simulation(const SimScenario& sc) {
  if (sc.duration <= 0) throw Error("scenario duration must be positive");
  if (sc.sensors.imu_rate % sc.sensors.cam_rate != 0) throw Error("IMU rate must be a multiple of the camera rate");

  std::seed_seq seq{static_cast<std::uint32_t>(sc.seed), static_cast<std::uint32_t>(sc.seed >> 32),
                    static_cast<std::uint32_t>(sc.kind)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> unit(0.0, 1.0);
  auto gauss3 = [&](double sigma) { return Vector3d(sigma * unit(rng), sigma * unit(rng), sigma * unit(rng)); };

  const Trajectory traj(sc.kind);
  const Priors& pr = sc.priors;
  const bool noisy = !sc.zero_noise;

  // Truth: biases and time offset drawn per run, extrinsics fixed.
  const Vector3d bg = gauss3(pr.gyro_bias), ba = gauss3(pr.accel_bias);
  double td = noisy ? sc.td_sigma * unit(rng) : 0.0;
  if (sc.true_td) td = *sc.true_td;
  const Extrinsics ext = default_extrinsics();

  const std::vector<ImuSample> imu = synthesize_imu(traj, sc.sensors, bg, ba, sc.duration + 1.0, rng, noisy);
  std::vector<double> stamps;
  for (int k = sc.sensors.cam_rate / 2; k <= static_cast<int>(sc.duration * sc.sensors.cam_rate); ++k) {
    stamps.push_back(static_cast<double>(k) / sc.sensors.cam_rate);
  }

  const TrajectorySample s0 = traj(0.0);
  NominalState truth0;
  truth0.R = s0.R;
  truth0.p = s0.p;
  truth0.v = s0.v;
  truth0.bg = bg;
  truth0.ba = ba;
  truth0.ext = ext;

  CameraStream cam;
  if (sc.zero_noise) {
    DiscreteTruth dt(imu, truth0);
    cam = synthesize_camera(std::ref(dt), stamps, td, ext, sc.sensors, rng, false);
  } else {
    cam = synthesize_camera(traj, stamps, td, ext, sc.sensors, rng, true);
  }

  // Initial estimate and prior.
  NominalState x0 = truth0;
  x0.bg.setZero();
  x0.ba.setZero();
  x0.td = 0;
  if (noisy) {
    const Vector3d tilt(pr.tilt * unit(rng), pr.tilt * unit(rng), 0);
    x0.R = normalized(so3_exp(-tilt) * s0.R);
    x0.v = s0.v - gauss3(pr.velocity);
    if (sc.estimate_extrinsics) {
      x0.ext.p_BC = ext.p_BC - gauss3(pr.p_bc);
      x0.ext.R_BC = normalized(ext.R_BC * so3_exp(-gauss3(pr.theta_bc)));
    }
  } else {
    x0.bg = bg;
    x0.ba = ba;
  }

  FilterConfig fc;
  fc.estimate_extrinsics = sc.estimate_extrinsics;
  fc.gyro_noise = sc.sensors.gyro_noise;
  fc.accel_noise = sc.sensors.accel_noise;
  fc.pixel_sigma = sc.sensors.pixel_sigma();
  const int n0 = sc.estimate_extrinsics ? Ekf::kCore + 7 : Ekf::kCore + 1;
  MatrixXd P0 = MatrixXd::Zero(n0, n0);
  const Vector3d tilt_var(pr.tilt * pr.tilt, pr.tilt * pr.tilt, 0);
  P0.block<3, 3>(Ekf::kTheta, Ekf::kTheta) = tilt_var.asDiagonal();
  P0.block<3, 3>(Ekf::kV, Ekf::kV) = pr.velocity * pr.velocity * Matrix3d::Identity();
  P0.block<3, 3>(Ekf::kBg, Ekf::kBg) = pr.gyro_bias * pr.gyro_bias * Matrix3d::Identity();
  P0.block<3, 3>(Ekf::kBa, Ekf::kBa) = pr.accel_bias * pr.accel_bias * Matrix3d::Identity();
  if (sc.estimate_extrinsics) {
    P0.block<3, 3>(Ekf::kCore, Ekf::kCore) = pr.p_bc * pr.p_bc * Matrix3d::Identity();
    P0.block<3, 3>(Ekf::kCore + 3, Ekf::kCore + 3) = pr.theta_bc * pr.theta_bc * Matrix3d::Identity();
  }
  P0(n0 - 1, n0 - 1) = pr.time_offset * pr.time_offset;
  Ekf ekf(fc, x0, 0.0, P0);
  if (sc.linearization == Linearization::kGroundTruth) {
    const auto& points = cam.landmarks;
    ekf.set_oracle({traj, [&points](int id) { return points.at(static_cast<std::size_t>(id)); }, ext, td});
  }

  RunResult res;
  res.scenario = sc.name.empty() ? to_string(sc.kind) : sc.name;
  res.seed = sc.seed;
  res.true_td = td;
  for (const auto& name : variable_names(sc.estimate_extrinsics)) {
    VariableSeries s;
    s.name = name;
    s.judged = name != "theta_z" && name.rfind("p_", 0) != 0;
    if (name.rfind("p_bc", 0) == 0) s.judged = true;
    res.series.push_back(std::move(s));
  }

  std::function<TrajectorySample(double)> truth_at = traj;
  DiscreteTruth discrete(imu, truth0);
  if (sc.zero_noise) truth_at = std::ref(discrete);

  res.times.push_back(0.0);
  res.innovations.push_back(0.0);
  record(res, ekf, truth_at(0.0), bg, ba, ext, td, sc.estimate_extrinsics);
  try {
    for (const auto& frame : cam.frames) {
      ekf.propagate(imu, frame.stamp + ekf.state().td);
      const UpdateStats st = ekf.update(frame);
      res.times.push_back(frame.stamp);
      res.innovations.push_back(st.max_abs_innovation);
      res.max_abs_innovation = std::max(res.max_abs_innovation, st.max_abs_innovation);
      record(res, ekf, truth_at(ekf.time()), bg, ba, ext, td, sc.estimate_extrinsics);
      if (!std::isfinite(core_nees(res, ekf)) || core_nees(res, ekf) > 1e6) {
        throw FilterDiverged("filter diverged at t = " + std::to_string(frame.stamp));
      }
    }
  } catch (const Error& e) {
    res.diverged = true;
    res.message = e.what();
  }
  res.min_eigenvalue = ekf.min_eigenvalue();

  if (res.times.size() >= 2) {
    for (const auto& s : res.series) {
      if (s.judged) res.verdicts.push_back(classify_convergence(s.name, s.error, s.sigma3, sc.thresholds));
    }
  }
  return res;
}

std::vector<RunResult> run_batch(const SimScenario& base, int runs, std::uint64_t seed, kernels::Execution exec) {
  if (runs < 1) throw Error("at least one run is required");
  std::vector<RunResult> out(static_cast<std::size_t>(runs));
  std::exception_ptr error;
  auto one = [&](int i) {
    SimScenario sc = base;
    sc.seed = seed + static_cast<std::uint64_t>(i);
    out[static_cast<std::size_t>(i)] = run_simulation(sc);
  };
  if (exec == kernels::Execution::kSerial) {
    for (int i = 0; i < runs; ++i) one(i);
    return out;
  }
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < runs; ++i) {
    try {
      one(i);
    } catch (...) {
#pragma omp critical(noct_sim_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

std::string summary_json(const std::vector<RunResult>& runs) {
  using json = nlohmann::ordered_json;
  json j;
  j["scenario"] = runs.empty() ? "" : runs.front().scenario;
  json arr = json::array();
  std::vector<std::string> order;
  std::map<std::string, std::map<std::string, int>> counts;
  for (const auto& r : runs) {
    json run;
    run["seed"] = r.seed;
    run["csv"] = r.csv_name();
    run["true_td"] = r.true_td;
    run["diverged"] = r.diverged;
    if (!r.message.empty()) run["message"] = r.message;
    json verdicts = json::object();
    for (const auto& v : r.verdicts) {
      verdicts[v.variable] = {{"ratio", v.ratio},
                              {"label", to_string(v.label)},
                              {"consistent", v.consistent},
                              {"final_error", v.final_error}};
      if (!counts.count(v.variable)) order.push_back(v.variable);
      ++counts[v.variable][to_string(v.label)];
    }
    run["verdicts"] = std::move(verdicts);
    arr.push_back(std::move(run));
  }
  j["runs"] = std::move(arr);
  json tally = json::object();
  for (const auto& name : order) {
    json c = json::object();
    for (const char* label : {"Converged", "Marginal", "NonConverged"}) c[label] = counts[name][label];
    tally[name] = std::move(c);
  }
  j["label_counts"] = std::move(tally);
  return j.dump(2) + "\n";
}

}  // namespace noct::sim
