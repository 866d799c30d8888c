#pragma once

#include <cstddef>
#include <ostream>
#include <vector>

#include "noct/expr.hpp"

namespace noct {

/// Dense row-major matrix of exact rationals.
class RationalMatrix {
 public:
  RationalMatrix() = default;
  RationalMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
  RationalMatrix(std::initializer_list<std::initializer_list<Rational>> rows);

  static RationalMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  Rational& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const Rational& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  RationalMatrix transpose() const;
  RationalMatrix select_rows(const std::vector<std::size_t>& idx) const;
  RationalMatrix without_column(std::size_t col) const;
  void append_row(const std::vector<Rational>& row);
  std::vector<Rational> row(std::size_t r) const;
  std::vector<Rational> column(std::size_t c) const;

  bool is_zero() const;

  friend RationalMatrix operator*(const RationalMatrix& a, const RationalMatrix& b);
  friend bool operator==(const RationalMatrix& a, const RationalMatrix& b) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Rational> data_;
};

std::ostream& operator<<(std::ostream& os, const RationalMatrix& m);

/// Exact rank by Gaussian elimination. Pivots are chosen by smallest bit size
/// to limit coefficient growth; the result does not depend on that choice.
std::size_t rank(const RationalMatrix& m);

/// Indices of a maximal independent row subset, picked greedily in row order.
std::vector<std::size_t> row_basis(const RationalMatrix& m);

/// Basis of the right kernel as columns: m * null_space(m) == 0 and the
/// column count is cols - rank.
RationalMatrix null_space(const RationalMatrix& m);

/// Rank of m with one column deleted.
std::size_t rank_without_column(const RationalMatrix& m, std::size_t col);

/// Incremental echelon form for greedy row selection. Each accepted row is
/// stored reduced against earlier ones with a unit pivot.
class RowEchelon {
 public:
  explicit RowEchelon(std::size_t cols) : cols_(cols) {}

  /// Reduces `row` against the accepted rows; accepts it and returns true if
  /// it is independent of them.
  bool insert(std::vector<Rational> row);

  /// True if `row` is independent of the accepted rows; nothing is stored.
  bool independent(std::vector<Rational> row) const;

  std::size_t rank() const { return pivots_.size(); }
  std::size_t cols() const { return cols_; }

  /// Fully reduced row echelon form of the accepted rows (rank x cols) and
  /// the pivot column of each row.
  RationalMatrix reduced(std::vector<std::size_t>* pivot_cols) const;

 private:
  void reduce(std::vector<Rational>& row) const;

  std::size_t cols_;
  std::vector<std::vector<Rational>> rows_;
  std::vector<std::size_t> pivots_;
};

}  // namespace noct
