#pragma once

#include <optional>
#include <string>
#include <vector>

#include "noct/expr.hpp"

namespace noct {

enum class ConstraintKind {
  kZeroState,    // 0 = c(x)
  kConstState,   // d = c(x), d an unknown constant
  kZeroAffine,   // 0 = c0(x) + sum c_l(x) u_l
  kConstAffine,  // d = c0(x) + sum c_l(x) u_l
};

const char* to_string(ConstraintKind kind);
ConstraintKind constraint_kind_from_string(std::string_view s);

struct InputTerm {
  std::string input;
  Expr coeff;
};

/// One scalar linear constraint. Vector constraints are lists of these.
struct Constraint {
  ConstraintKind kind = ConstraintKind::kZeroState;
  Expr c0;
  std::vector<InputTerm> input_terms;
  /// State variable (state kinds) or input (affine kinds) to eliminate.
  std::optional<std::string> solve_for;
  /// Name of the unknown constant d for the constant-valued kinds.
  std::optional<std::string> param;
};

struct Output {
  std::string name;
  Expr expr;
};

/// x' = f0(x) + sum_i f_i(x) u_i,  y = h(x),  plus optional constraints.
struct AffineControlSystem {
  std::vector<std::string> state;
  std::vector<std::string> inputs;
  std::vector<std::string> constants;
  std::vector<Expr> drift;
  std::vector<std::vector<Expr>> fields;  // one per input, each |state| long
  std::vector<Output> outputs;
  std::vector<Constraint> constraints;

  std::size_t state_dim() const { return state.size(); }
  std::optional<std::size_t> state_index(std::string_view name) const;
  std::optional<std::size_t> input_index(std::string_view name) const;
  std::vector<VarId> state_ids() const;
  /// f0 followed by f1..fm.
  std::vector<std::vector<Expr>> all_fields() const;
};

/// Human-readable invariant violations; empty when the system is well formed.
std::vector<std::string> validate(const AffineControlSystem& sys);

struct ConversionOptions {
  int trials = kDefaultTrials;
  std::uint64_t seed = 0;
};

/// Each converter eliminates `con` and rewrites the constraints still pending
/// in `sys.constraints` so they refer to the converted variables.
AffineControlSystem convert_zero_state(const AffineControlSystem& sys, const Constraint& con,
                                       const ConversionOptions& opts = {});
AffineControlSystem convert_const_state(const AffineControlSystem& sys, const Constraint& con,
                                        const ConversionOptions& opts = {});
AffineControlSystem convert_zero_affine(const AffineControlSystem& sys, const Constraint& con,
                                        const ConversionOptions& opts = {});
AffineControlSystem convert_const_affine(const AffineControlSystem& sys, const Constraint& con,
                                         const ConversionOptions& opts = {});

/// Folds every constraint through its converter in declaration order.
AffineControlSystem apply_constraints(const AffineControlSystem& sys, const ConversionOptions& opts = {});

}  // namespace noct
