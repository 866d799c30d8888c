#pragma once

#include <optional>
#include <string>
#include <vector>

#include "noct/system.hpp"

namespace noct::models {

/// Visual-inertial odometry with camera-IMU extrinsics and one landmark.
/// State: v(3) g(3) bg(3) ba(3) p_CB(3) q_CB(3) gamma(2) rho; inputs w(3) a(3).
AffineControlSystem vio_system();

enum class VioConstraint { kConstLocalAccel, kSingleAxisZ, kPureTranslation };

const char* to_string(VioConstraint kind);
/// Accepts the names printed by to_string(); throws ModelError otherwise.
VioConstraint vio_constraint_from_string(std::string_view name);

std::vector<Constraint> vio_constraints(VioConstraint kind);

/// Rotation R_CB of the trimmed quaternion (1, qx, qy, qz), row-major.
std::vector<Expr> rotation_from_trimmed_quaternion(const Expr& qx, const Expr& qy, const Expr& qz);

struct ExpectedResult {
  std::string name;
  std::optional<VioConstraint> constraint;
  std::size_t state_dim = 0;
  std::size_t rank = 0;
  std::size_t kernel_dim = 0;
  std::vector<std::string> indeterminable;
  /// Symbolic kernel vectors over the converted state.
  std::vector<std::vector<Expr>> null_vectors;
};

/// Expected analysis results for the unconstrained model and each preset.
std::vector<ExpectedResult> vio_expected_results();

/// The constant-acceleration kernel vector exactly as published, over the
/// original 21 coordinates, with a_t + g written as d.
std::vector<Expr> published_const_accel_vector();

}  // namespace noct::models
