#pragma once

// Data-parallel kernels over sample points. Each kernel has a serial
// reference path and an OpenMP path; both produce identical results.

#include <span>
#include <vector>

#include "noct/expr.hpp"
#include "noct/rational_matrix.hpp"

namespace noct::kernels {

enum class Execution { kSerial, kParallel };

/// Keeps one memoising Evaluator per sample point so that rows added in later
/// rounds reuse every subexpression value already computed.
class MultiPointEvaluator {
 public:
  MultiPointEvaluator(std::vector<Point> points, Execution exec);

  std::size_t size() const { return points_.size(); }
  const Point& point(std::size_t i) const { return points_[i]; }
  const std::vector<Point>& points() const { return points_; }
  Execution execution() const { return exec_; }

  /// Swaps in a new point and drops everything memoised for the old one.
  void replace_point(std::size_t i, Point p);

  /// values[p][i] = exprs[i] at point p. Points where a denominator vanished
  /// are flagged in `poles` and their row is left empty.
  std::vector<std::vector<Rational>> evaluate(std::span<const Expr> exprs, std::vector<bool>& poles);

 private:
  std::vector<Point> points_;
  std::vector<Evaluator> evaluators_;
  Execution exec_;
};

/// Reshapes a flat value vector (rows*cols, row-major) into a matrix.
RationalMatrix to_matrix(const std::vector<Rational>& flat, std::size_t rows, std::size_t cols);

/// Greedy row basis of each matrix.
std::vector<std::vector<std::size_t>> row_bases(const std::vector<RationalMatrix>& mats, Execution exec);

/// Right-kernel basis of each matrix.
std::vector<RationalMatrix> null_spaces(const std::vector<RationalMatrix>& mats, Execution exec);

/// ranks[p][c] = rank of mats[p] with column c removed.
std::vector<std::vector<std::size_t>> column_deleted_ranks(const std::vector<RationalMatrix>& mats,
                                                           Execution exec);

}  // namespace noct::kernels
