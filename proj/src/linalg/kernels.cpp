#include "noct/kernels.hpp"

#include <exception>

namespace noct::kernels {

namespace {

// Runs body(i) for i in [0, n), in parallel when requested. The first
// exception raised by any iteration is rethrown after the loop.
template <typename Body>
void for_each_index(std::size_t n, Execution exec, Body&& body) {
  if (exec == Execution::kSerial) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  const auto count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(noct_kernel_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace

MultiPointEvaluator::MultiPointEvaluator(std::vector<Point> points, Execution exec)
    : points_(std::move(points)), exec_(exec) {
  evaluators_.reserve(points_.size());
  for (const auto& p : points_) evaluators_.emplace_back(p);
}

void MultiPointEvaluator::replace_point(std::size_t i, Point p) {
  points_.at(i) = std::move(p);
  evaluators_[i] = Evaluator(points_[i]);
}

std::vector<std::vector<Rational>> MultiPointEvaluator::evaluate(std::span<const Expr> exprs,
                                                                 std::vector<bool>& poles) {
  std::vector<std::vector<Rational>> out(points_.size());
  std::vector<char> pole_flags(points_.size(), 0);
  for_each_index(points_.size(), exec_, [&](std::size_t p) {
    std::vector<Rational> values;
    values.reserve(exprs.size());
    try {
      for (const auto& e : exprs) values.push_back(evaluators_[p](e));
    } catch (const DivisionByZero&) {
      pole_flags[p] = 1;
      return;
    }
    out[p] = std::move(values);
  });
  poles.assign(pole_flags.begin(), pole_flags.end());
  return out;
}

RationalMatrix to_matrix(const std::vector<Rational>& flat, std::size_t rows, std::size_t cols) {
  if (flat.size() != rows * cols) throw Error("value count does not match matrix shape");
  RationalMatrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = flat[r * cols + c];
  }
  return m;
}

std::vector<std::vector<std::size_t>> row_bases(const std::vector<RationalMatrix>& mats, Execution exec) {
  std::vector<std::vector<std::size_t>> out(mats.size());
  for_each_index(mats.size(), exec, [&](std::size_t i) { out[i] = row_basis(mats[i]); });
  return out;
}

std::vector<RationalMatrix> null_spaces(const std::vector<RationalMatrix>& mats, Execution exec) {
  std::vector<RationalMatrix> out(mats.size());
  for_each_index(mats.size(), exec, [&](std::size_t i) { out[i] = null_space(mats[i]); });
  return out;
}

std::vector<std::vector<std::size_t>> column_deleted_ranks(const std::vector<RationalMatrix>& mats,
                                                           Execution exec) {
  std::vector<std::vector<std::size_t>> out(mats.size());
  for (std::size_t p = 0; p < mats.size(); ++p) out[p].resize(mats[p].cols());
  // Flatten (point, column) pairs so small point counts still spread across threads.
  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  for (std::size_t p = 0; p < mats.size(); ++p) {
    for (std::size_t c = 0; c < mats[p].cols(); ++c) jobs.emplace_back(p, c);
  }
  for_each_index(jobs.size(), exec, [&](std::size_t j) {
    const auto [p, c] = jobs[j];
    out[p][c] = rank_without_column(mats[p], c);
  });
  return out;
}

}  // namespace noct::kernels
