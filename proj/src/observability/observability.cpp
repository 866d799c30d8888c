#include "noct/observability.hpp"

#include <algorithm>
#include <random>
#include <sstream>

namespace noct {

std::string LieWord::to_string() const {
  std::ostringstream os;
  os << 'L' << fields.size();
  if (!fields.empty()) {
    os << '{';
    for (std::size_t i = 0; i < fields.size(); ++i) os << (i ? "," : "") << 'f' << fields[i];
    os << '}';
  }
  os << 'h' << output + 1;
  return os.str();
}

Expr lie_derivative(const AffineControlSystem& sys, const Expr& h, const std::vector<std::size_t>& word) {
  const auto fields = sys.all_fields();
  const auto ids = sys.state_ids();
  Differentiator diff;
  Expr e = h;
  for (auto j : word) {
    if (j >= fields.size()) {
      throw IndexOutOfRange("field index " + std::to_string(j) + " but the system has " +
                            std::to_string(fields.size()) + " fields");
    }
    e = dot(diff.gradient(e, ids), fields[j]);
  }
  return e;
}

const char* to_string(Observability o) {
  return o == Observability::kObservable ? "Observable" : "Indeterminable";
}

const char* to_string(TimeOffsetVerdict v) {
  return v == TimeOffsetVerdict::kUnobservableSufficient ? "UnobservableSufficient" : "Unknown";
}

std::vector<std::string> ObservabilityReport::indeterminable() const {
  std::vector<std::string> out;
  for (const auto& [name, c] : classification) {
    if (c == Observability::kIndeterminable) out.push_back(name);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

using kernels::MultiPointEvaluator;

/// Draws sample points over state and constants, one generator per point so
/// a resample at one point leaves the others untouched.
class PointSource {
 public:
  PointSource(std::vector<std::string> vars, std::uint64_t seed, std::size_t count)
      : vars_(std::move(vars)) {
    for (std::size_t i = 0; i < count; ++i) {
      std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                        static_cast<std::uint32_t>(i)};
      std::uint64_t s = 0;
      std::uint32_t parts[2];
      seq.generate(parts, parts + 2);
      s = (static_cast<std::uint64_t>(parts[0]) << 32) | parts[1];
      seeds_.push_back(s);
      rngs_.emplace_back(s);
    }
  }

  Point draw(std::size_t i) {
    std::uniform_int_distribution<long> coord(-kSampleRange, kSampleRange);
    Point p;
    for (const auto& v : vars_) p.emplace(v, Rational(coord(rngs_[i])));
    return p;
  }

  const std::vector<std::uint64_t>& seeds() const { return seeds_; }

 private:
  std::vector<std::string> vars_;
  std::vector<std::uint64_t> seeds_;
  std::vector<std::mt19937_64> rngs_;
};

std::vector<Expr> flatten_gradients(const std::vector<CodistributionRow>& rows, std::size_t begin,
                                    std::size_t end) {
  std::vector<Expr> flat;
  for (std::size_t r = begin; r < end; ++r) {
    flat.insert(flat.end(), rows[r].gradient.begin(), rows[r].gradient.end());
  }
  return flat;
}

}  // namespace

Codistribution build_codistribution(const AffineControlSystem& sys, const AnalysisOptions& opts) {
  if (!sys.constraints.empty()) throw ModelError("system still has constraints; apply them first");
  if (auto diags = validate(sys); !diags.empty()) throw ModelError("invalid model: " + diags.front());
  if (opts.points < 1) throw Error("at least one sample point is required");
  if (opts.max_order < 0) throw Error("max order must be non-negative");

  const std::size_t n = sys.state_dim();
  const auto ids = sys.state_ids();
  const auto fields = sys.all_fields();
  const auto npts = static_cast<std::size_t>(opts.points);

  std::vector<std::string> sample_vars = sys.state;
  sample_vars.insert(sample_vars.end(), sys.constants.begin(), sys.constants.end());
  PointSource source(sample_vars, opts.seed, npts);

  std::vector<Point> initial;
  for (std::size_t p = 0; p < npts; ++p) initial.push_back(source.draw(p));
  MultiPointEvaluator eval(std::move(initial), opts.execution);

  Codistribution cod;
  cod.system = sys;
  cod.sample_seeds = source.seeds();
  std::vector<RowEchelon> echelons(npts, RowEchelon(n));
  std::vector<std::vector<std::vector<Rational>>> accepted_values(npts);  // [point][row]

  // Evaluates candidate gradients at every point. A pole moves that point to
  // a fresh draw and replays the rows already retained there.
  auto evaluate_candidates = [&](const std::vector<CodistributionRow>& cands) {
    const std::vector<Expr> flat = flatten_gradients(cands, 0, cands.size());
    std::vector<bool> poles;
    auto values = eval.evaluate(flat, poles);
    for (std::size_t p = 0; p < npts; ++p) {
      int attempts = 0;
      while (poles[p]) {
        if (++attempts > kMaxResamples) throw PoleAtAllSamples();
        MultiPointEvaluator single({source.draw(p)}, kernels::Execution::kSerial);
        std::vector<Expr> replay = flatten_gradients(cod.rows, 0, cod.rows.size());
        replay.insert(replay.end(), flat.begin(), flat.end());
        std::vector<bool> hit;
        auto vals = single.evaluate(replay, hit);
        if (hit[0]) continue;
        cod.warnings.push_back("sample point " + std::to_string(p) + " hit a pole and was redrawn");
        eval.replace_point(p, single.point(0));
        echelons[p] = RowEchelon(n);
        accepted_values[p].clear();
        for (std::size_t r = 0; r < cod.rows.size(); ++r) {
          std::vector<Rational> row(vals[0].begin() + static_cast<std::ptrdiff_t>(r * n),
                                    vals[0].begin() + static_cast<std::ptrdiff_t>((r + 1) * n));
          echelons[p].insert(row);
          accepted_values[p].push_back(std::move(row));
        }
        values[p].assign(vals[0].begin() + static_cast<std::ptrdiff_t>(cod.rows.size() * n), vals[0].end());
        poles[p] = false;
      }
    }
    return values;
  };

  // Greedy selection: a candidate is kept if it raises the rank at some point.
  auto absorb = [&](std::vector<CodistributionRow> cands) {
    const auto values = evaluate_candidates(cands);
    std::size_t added = 0;
    for (std::size_t c = 0; c < cands.size(); ++c) {
      bool independent = false;
      std::vector<std::vector<Rational>> rows(npts);
      for (std::size_t p = 0; p < npts; ++p) {
        rows[p].assign(values[p].begin() + static_cast<std::ptrdiff_t>(c * n),
                       values[p].begin() + static_cast<std::ptrdiff_t>((c + 1) * n));
        if (!independent && echelons[p].independent(rows[p])) independent = true;
      }
      if (!independent) continue;
      for (std::size_t p = 0; p < npts; ++p) {
        echelons[p].insert(rows[p]);
        accepted_values[p].push_back(std::move(rows[p]));
      }
      cod.rows.push_back(std::move(cands[c]));
      ++added;
    }
    return added;
  };

  auto generic_rank = [&] {
    std::size_t best = 0, worst = n;
    for (const auto& e : echelons) {
      best = std::max(best, e.rank());
      worst = std::min(worst, e.rank());
    }
    if (best != worst) {
      cod.warnings.push_back("order " + std::to_string(cod.order) + ": rank differs across sample points (" +
                             std::to_string(worst) + " to " + std::to_string(best) + ")");
    }
    return best;
  };

  Differentiator diff;
  std::vector<CodistributionRow> cands;
  for (std::size_t i = 0; i < sys.outputs.size(); ++i) {
    const Expr& h = sys.outputs[i].expr;
    cands.push_back({LieWord{i, {}}, h, diff.gradient(h, ids)});
  }
  std::size_t frontier_begin = 0;
  std::size_t added = absorb(std::move(cands));
  cod.rank_history.emplace_back(0, generic_rank());

  while (added > 0 && cod.rank() < n) {
    if (cod.order >= opts.max_order) {
      cod.truncated = true;
      cod.warnings.push_back("stopped at max order " + std::to_string(opts.max_order) +
                             " before the rank saturated");
      break;
    }
    ++cod.order;
    const std::size_t frontier_end = cod.rows.size();
    cands.clear();
    for (std::size_t r = frontier_begin; r < frontier_end; ++r) {
      for (std::size_t j = 0; j < fields.size(); ++j) {
        Expr lie = dot(cod.rows[r].gradient, fields[j]);
        if (lie.is_constant()) continue;
        LieWord word = cod.rows[r].word;
        word.fields.push_back(j);
        auto grad = diff.gradient(lie, ids);
        cands.push_back({std::move(word), std::move(lie), std::move(grad)});
      }
    }
    frontier_begin = frontier_end;
    added = absorb(std::move(cands));
    cod.rank_history.emplace_back(cod.order, generic_rank());
  }

  cod.points = eval.points();
  for (std::size_t p = 0; p < npts; ++p) {
    RationalMatrix m(0, n);
    for (const auto& row : accepted_values[p]) m.append_row(row);
    cod.values.push_back(std::move(m));
  }
  return cod;
}

ObservabilityReport classify_variables(const Codistribution& cod, kernels::Execution exec) {
  ObservabilityReport rep;
  const auto& sys = cod.system;
  rep.state = sys.state;
  rep.state_dim = sys.state_dim();
  rep.rank_history = cod.rank_history;
  rep.final_rank = cod.rank();
  rep.order = cod.order;
  rep.truncated = cod.truncated;
  rep.sample_seeds = cod.sample_seeds;
  rep.warnings = cod.warnings;
  for (const auto& r : cod.rows) rep.basis_words.push_back(r.word.to_string());

  const auto ranks = kernels::row_bases(cod.values, exec);
  const auto deleted = kernels::column_deleted_ranks(cod.values, exec);
  rep.null_basis_numeric = kernels::null_spaces(cod.values, exec);

  for (std::size_t c = 0; c < rep.state_dim; ++c) {
    std::size_t drops = 0;
    for (std::size_t p = 0; p < cod.values.size(); ++p) {
      if (deleted[p][c] + 1 == ranks[p].size()) ++drops;
    }
    auto verdict = drops == cod.values.size() ? Observability::kObservable : Observability::kIndeterminable;
    if (drops != 0 && drops != cod.values.size()) {
      rep.warnings.push_back("'" + sys.state[c] + "' is observable at " + std::to_string(drops) + " of " +
                             std::to_string(cod.values.size()) + " sample points");
    }
    rep.classification.emplace_back(sys.state[c], verdict);
  }
  return rep;
}

bool verify_null_vector(const Codistribution& cod, const std::vector<Expr>& n) {
  const std::size_t dim = cod.system.state_dim();
  if (n.size() != dim) {
    throw DimensionMismatch("null vector has " + std::to_string(n.size()) + " entries, expected " +
                     std::to_string(dim));
  }
  std::size_t usable = 0;
  for (std::size_t p = 0; p < cod.points.size(); ++p) {
    std::vector<Rational> v;
    try {
      Evaluator ev(cod.points[p]);
      for (const auto& e : n) v.push_back(ev(e));
    } catch (const DivisionByZero&) {
      continue;
    }
    ++usable;
    const auto& m = cod.values[p];
    for (std::size_t r = 0; r < m.rows(); ++r) {
      Rational acc = 0;
      for (std::size_t c = 0; c < dim; ++c) {
        if (sgn(m(r, c)) != 0 && sgn(v[c]) != 0) acc += m(r, c) * v[c];
      }
      if (sgn(acc) != 0) return false;
    }
  }
  return usable > 0;
}

ObservabilityReport analyze(const AffineControlSystem& sys, const AnalysisOptions& opts) {
  const AffineControlSystem std_form = apply_constraints(sys, {kDefaultTrials, opts.seed});
  return classify_variables(build_codistribution(std_form, opts), opts.execution);
}

ObservabilityReport analyze(const AffineControlSystem& sys, const AnalysisOptions& opts,
                            const std::vector<std::vector<Expr>>& candidates) {
  const AffineControlSystem std_form = apply_constraints(sys, {kDefaultTrials, opts.seed});
  const Codistribution cod = build_codistribution(std_form, opts);
  ObservabilityReport rep = classify_variables(cod, opts.execution);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (verify_null_vector(cod, candidates[i])) {
      rep.verified_null_vectors.push_back(candidates[i]);
    } else {
      rep.warnings.push_back("candidate vector " + std::to_string(i + 1) + " does not annihilate the codistribution");
    }
  }
  return rep;
}

TimeOffsetVerdict check_time_offset_condition(const ConstancyDescriptor& d) {
  auto all_constant = [](const std::map<std::string, bool>& m) {
    return std::all_of(m.begin(), m.end(), [](const auto& kv) { return kv.second; });
  };
  if (all_constant(d.input_constant) || all_constant(d.output_constant)) {
    return TimeOffsetVerdict::kUnobservableSufficient;
  }
  return TimeOffsetVerdict::kUnknown;
}

}  // namespace noct
