#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "noct/expr.hpp"
#include "noct/kernels.hpp"
#include "noct/rational_matrix.hpp"
#include "noct/system.hpp"

namespace noct {

/// Derivative word: output index plus the sequence of fields applied to it,
/// first applied first. Field 0 is the drift.
struct LieWord {
  std::size_t output = 0;
  std::vector<std::size_t> fields;

  /// "L2{f0,f3}h1"; outputs are numbered from 1.
  std::string to_string() const;
};

/// Iterated Lie derivative: the empty word returns h, appending j maps
/// e to grad(e) . f_j.
Expr lie_derivative(const AffineControlSystem& sys, const Expr& h, const std::vector<std::size_t>& word);

struct AnalysisOptions {
  int points = 5;
  int max_order = 6;
  std::uint64_t seed = 0;
  kernels::Execution execution = kernels::Execution::kParallel;
};

struct CodistributionRow {
  LieWord word;
  Expr lie;
  std::vector<Expr> gradient;
};

struct Codistribution {
  AffineControlSystem system;
  /// Retained rows only; they are independent at the sample points.
  std::vector<CodistributionRow> rows;
  int order = 0;
  bool truncated = false;
  /// (order, generic rank after that round).
  std::vector<std::pair<int, std::size_t>> rank_history;
  std::vector<Point> points;
  std::vector<std::uint64_t> sample_seeds;
  /// values[p] = rows evaluated at points[p], one matrix row per retained row.
  std::vector<RationalMatrix> values;
  std::vector<std::string> warnings;

  std::size_t rank() const { return rank_history.empty() ? 0 : rank_history.back().second; }
};

/// Builds the codistribution of a constraint-free system to rank saturation.
Codistribution build_codistribution(const AffineControlSystem& sys, const AnalysisOptions& opts = {});

enum class Observability { kObservable, kIndeterminable };
const char* to_string(Observability o);

struct ObservabilityReport {
  std::vector<std::string> state;
  std::vector<std::pair<int, std::size_t>> rank_history;
  std::size_t final_rank = 0;
  std::size_t state_dim = 0;
  int order = 0;
  bool truncated = false;
  std::vector<std::pair<std::string, Observability>> classification;
  std::vector<std::string> basis_words;
  std::vector<RationalMatrix> null_basis_numeric;  // n x k per sample point
  std::vector<std::vector<Expr>> verified_null_vectors;
  std::vector<std::uint64_t> sample_seeds;
  std::vector<std::string> warnings;

  std::size_t kernel_dim() const { return state_dim - final_rank; }
  std::vector<std::string> indeterminable() const;
};

ObservabilityReport classify_variables(const Codistribution& cod,
                                       kernels::Execution exec = kernels::Execution::kParallel);

/// True iff every retained row annihilates n at the shared sample points.
/// Points where n itself has a pole are skipped; at least one must remain.
bool verify_null_vector(const Codistribution& cod, const std::vector<Expr>& n);

/// Applies constraints, builds the codistribution and classifies.
ObservabilityReport analyze(const AffineControlSystem& sys, const AnalysisOptions& opts = {});
/// As above; candidates that annihilate the codistribution are listed in
/// verified_null_vectors, the others produce a warning.
ObservabilityReport analyze(const AffineControlSystem& sys, const AnalysisOptions& opts,
                            const std::vector<std::vector<Expr>>& candidates);

// ---- time offset ----

struct ConstancyDescriptor {
  std::map<std::string, bool> input_constant;
  std::map<std::string, bool> output_constant;
};

enum class TimeOffsetVerdict { kUnobservableSufficient, kUnknown };
const char* to_string(TimeOffsetVerdict v);

/// Sufficient condition only: constant inputs or constant observations make
/// the time offset unobservable; anything else is undecided.
TimeOffsetVerdict check_time_offset_condition(const ConstancyDescriptor& d);

}  // namespace noct
