#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "noct/kernels.hpp"
#include "noct/sim/ekf.hpp"
#include "noct/sim/sensors.hpp"
#include "noct/sim/trajectory.hpp"

namespace noct::sim {

struct Priors {
  double tilt = 0.02;  // rad, roll and pitch; yaw and position are gauge and start exact
  double velocity = 0.1;
  double gyro_bias = 0.01;
  double accel_bias = 0.05;
  double p_bc = 0.1;
  double theta_bc = 0.02;
  double time_offset = 0.05;
};

struct ConvergenceThresholds {
  double converged = 0.1;      // 3-sigma ratio below this is Converged
  double non_converged = 0.3;  // above this is NonConverged
  double consistent_fraction = 0.95;
};

/// Where the filter evaluates its Jacobians. First estimates give a realistic
/// estimator; the ground truth removes linearization error, so that what
/// converges reflects observability alone.
enum class Linearization { kFirstEstimates, kGroundTruth };
const char* to_string(Linearization mode);
Linearization linearization_from_string(std::string_view name);

struct SimScenario {
  std::string name;
  TrajectoryKind kind = TrajectoryKind::kGeneral3D;
  double duration = 60;
  SensorConfig sensors;
  bool estimate_extrinsics = true;
  Priors priors;
  /// Spread of the true time offset, drawn per run.
  double td_sigma = 0.05;
  /// Fixed true time offset instead of a draw, s.
  std::optional<double> true_td;
  /// No noise, exact initial state, t_d = 0, and camera data generated from
  /// the filter's own discrete integration of the IMU stream.
  bool zero_noise = false;
  Linearization linearization = Linearization::kGroundTruth;
  std::uint64_t seed = 0;
  ConvergenceThresholds thresholds;
};

/// slope_line, slope_lemniscate, slope_circle (extrinsics estimated) and
/// case_a .. case_d (extrinsics known), plus general_3d.
std::vector<std::string> scenario_names();
SimScenario named_scenario(std::string_view name);

enum class ConvergenceLabel { kConverged, kNonConverged, kMarginal };
const char* to_string(ConvergenceLabel label);

struct ConvergenceVerdict {
  std::string variable;
  double ratio = 1;
  ConvergenceLabel label = ConvergenceLabel::kNonConverged;
  bool consistent = false;
  double final_error = 0;
};

/// ratio = final / initial 3-sigma; consistency is |error| <= 3-sigma in
/// enough epochs.
ConvergenceVerdict classify_convergence(const std::string& variable, const std::vector<double>& error,
                                        const std::vector<double>& sigma3, const ConvergenceThresholds& th = {});

struct VariableSeries {
  std::string name;
  bool judged = true;  // false for gauge directions that start with zero variance
  std::vector<double> error;
  std::vector<double> sigma3;
};

struct RunResult {
  std::string scenario;
  std::uint64_t seed = 0;
  double true_td = 0;
  std::vector<double> times;  // camera stamps; the first row is the prior at t = 0
  std::vector<VariableSeries> series;
  std::vector<ConvergenceVerdict> verdicts;
  bool diverged = false;
  std::string message;
  double max_abs_innovation = 0;  // over all updates
  std::vector<double> innovations;  // per epoch maximum
  double min_eigenvalue = 0;

  const ConvergenceVerdict* verdict(std::string_view variable) const;
  std::string csv() const;
  std::string csv_name() const { return scenario + "_" + std::to_string(seed) + ".csv"; }
};

RunResult run_simulation(const SimScenario& scenario);

/// Runs seeds seed, seed+1, ... of a scenario; results are in seed order.
std::vector<RunResult> run_batch(const SimScenario& base, int runs, std::uint64_t seed,
                                 kernels::Execution exec = kernels::Execution::kParallel);

std::string summary_json(const std::vector<RunResult>& runs);

}  // namespace noct::sim
