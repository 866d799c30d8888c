#include "noct/rational_matrix.hpp"

#include <algorithm>
#include <limits>

namespace noct {

RationalMatrix::RationalMatrix(std::initializer_list<std::initializer_list<Rational>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw Error("ragged matrix initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

RationalMatrix RationalMatrix::identity(std::size_t n) {
  RationalMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
  return m;
}

RationalMatrix RationalMatrix::transpose() const {
  RationalMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  }
  return t;
}

RationalMatrix RationalMatrix::select_rows(const std::vector<std::size_t>& idx) const {
  RationalMatrix out(idx.size(), cols_);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= rows_) throw IndexOutOfRange("row index " + std::to_string(idx[i]));
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(idx[i] * cols_), cols_,
                out.data_.begin() + static_cast<std::ptrdiff_t>(i * cols_));
  }
  return out;
}

RationalMatrix RationalMatrix::without_column(std::size_t col) const {
  if (col >= cols_) {
    throw IndexOutOfRange("column " + std::to_string(col) + " of a matrix with " +
                          std::to_string(cols_) + " columns");
  }
  RationalMatrix out(rows_, cols_ - 1);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0, k = 0; c < cols_; ++c) {
      if (c != col) out(r, k++) = (*this)(r, c);
    }
  }
  return out;
}

void RationalMatrix::append_row(const std::vector<Rational>& row) {
  if (rows_ == 0 && cols_ == 0) cols_ = row.size();
  if (row.size() != cols_) throw Error("row length mismatch");
  data_.insert(data_.end(), row.begin(), row.end());
  ++rows_;
}

std::vector<Rational> RationalMatrix::row(std::size_t r) const {
  return {data_.begin() + static_cast<std::ptrdiff_t>(r * cols_),
          data_.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols_)};
}

std::vector<Rational> RationalMatrix::column(std::size_t c) const {
  std::vector<Rational> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

bool RationalMatrix::is_zero() const {
  return std::all_of(data_.begin(), data_.end(), [](const Rational& v) { return sgn(v) == 0; });
}

RationalMatrix operator*(const RationalMatrix& a, const RationalMatrix& b) {
  if (a.cols_ != b.rows_) throw Error("matrix product dimension mismatch");
  RationalMatrix out(a.rows_, b.cols_);
  for (std::size_t i = 0; i < a.rows_; ++i) {
    for (std::size_t k = 0; k < a.cols_; ++k) {
      const Rational& aik = a(i, k);
      if (sgn(aik) == 0) continue;
      for (std::size_t j = 0; j < b.cols_; ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

std::ostream& operator<<(std::ostream& os, const RationalMatrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    os << '[';
    for (std::size_t c = 0; c < m.cols(); ++c) os << (c ? ", " : "") << rational_to_string(m(r, c));
    os << "]\n";
  }
  return os;
}

// ---------------------------------------------------------------------------

namespace {

std::size_t bit_size(const Rational& v) {
  return mpz_sizeinbase(v.get_num_mpz_t(), 2) + mpz_sizeinbase(v.get_den_mpz_t(), 2);
}

}  // namespace

void RowEchelon::reduce(std::vector<Rational>& row) const {
  if (row.size() != cols_) throw Error("row length mismatch");
  Rational scaled;
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const Rational f = row[pivots_[i]];
    if (sgn(f) == 0) continue;
    const auto& basis = rows_[i];
    for (std::size_t c = 0; c < cols_; ++c) {
      if (sgn(basis[c]) == 0) continue;
      scaled = f * basis[c];
      row[c] -= scaled;
    }
  }
}

bool RowEchelon::independent(std::vector<Rational> row) const {
  reduce(row);
  return std::any_of(row.begin(), row.end(), [](const Rational& v) { return sgn(v) != 0; });
}

bool RowEchelon::insert(std::vector<Rational> row) {
  reduce(row);
  std::size_t pivot = cols_;
  std::size_t best = std::numeric_limits<std::size_t>::max();
  for (std::size_t c = 0; c < cols_; ++c) {
    if (sgn(row[c]) == 0) continue;
    const std::size_t bits = bit_size(row[c]);
    if (bits < best) {
      best = bits;
      pivot = c;
    }
  }
  if (pivot == cols_) return false;
  const Rational inv = 1 / row[pivot];
  for (auto& v : row) {
    if (sgn(v) != 0) v *= inv;
  }
  rows_.push_back(std::move(row));
  pivots_.push_back(pivot);
  return true;
}

RationalMatrix RowEchelon::reduced(std::vector<std::size_t>* pivot_cols) const {
  auto rows = rows_;
  // Later rows are already zero at earlier pivots; clear the rest from the bottom up.
  for (std::size_t i = rows.size(); i-- > 0;) {
    for (std::size_t j = 0; j < i; ++j) {
      const Rational f = rows[j][pivots_[i]];
      if (sgn(f) == 0) continue;
      for (std::size_t c = 0; c < cols_; ++c) {
        if (sgn(rows[i][c]) != 0) rows[j][c] -= f * rows[i][c];
      }
    }
  }
  RationalMatrix out(rows.size(), cols_);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < cols_; ++c) out(i, c) = rows[i][c];
  }
  if (pivot_cols) *pivot_cols = pivots_;
  return out;
}

std::vector<std::size_t> row_basis(const RationalMatrix& m) {
  RowEchelon ech(m.cols());
  std::vector<std::size_t> idx;
  for (std::size_t r = 0; r < m.rows() && ech.rank() < m.cols(); ++r) {
    if (ech.insert(m.row(r))) idx.push_back(r);
  }
  return idx;
}

std::size_t rank(const RationalMatrix& m) { return row_basis(m).size(); }

RationalMatrix null_space(const RationalMatrix& m) {
  RowEchelon ech(m.cols());
  for (std::size_t r = 0; r < m.rows() && ech.rank() < m.cols(); ++r) ech.insert(m.row(r));
  std::vector<std::size_t> pivots;
  const RationalMatrix rref = ech.reduced(&pivots);

  std::vector<bool> is_pivot(m.cols(), false);
  for (auto p : pivots) is_pivot[p] = true;
  std::vector<std::size_t> free_cols;
  for (std::size_t c = 0; c < m.cols(); ++c) {
    if (!is_pivot[c]) free_cols.push_back(c);
  }

  RationalMatrix basis(m.cols(), free_cols.size());
  for (std::size_t k = 0; k < free_cols.size(); ++k) {
    const std::size_t f = free_cols[k];
    basis(f, k) = 1;
    for (std::size_t i = 0; i < pivots.size(); ++i) basis(pivots[i], k) = -rref(i, f);
  }
  return basis;
}

std::size_t rank_without_column(const RationalMatrix& m, std::size_t col) {
  return rank(m.without_column(col));
}

}  // namespace noct
