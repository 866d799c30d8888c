#pragma once

#include <vector>

#include "noct/expr.hpp"

namespace noct::detail {

struct Node {
  Expr::Kind kind;
  Rational value;  // kConstant
  VarId var = 0;   // kVariable
  long exponent = 0;  // kPow
  std::vector<Expr> children;
  VarSet free;
  std::size_t hash = 0;
};

/// Returns the canonical shared node for the given payload.
Expr intern(Expr::Kind kind, Rational value, VarId var, long exponent, std::vector<Expr> children);

inline const Node& node_of(const Expr& e) { return *e.node(); }

}  // namespace noct::detail
