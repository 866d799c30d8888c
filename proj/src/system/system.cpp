#include "noct/system.hpp"

#include <algorithm>
#include <set>

namespace noct {

const char* to_string(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::kZeroState:
      return "zero_state";
    case ConstraintKind::kConstState:
      return "const_state";
    case ConstraintKind::kZeroAffine:
      return "zero_affine";
    case ConstraintKind::kConstAffine:
      return "const_affine";
  }
  return "?";
}

ConstraintKind constraint_kind_from_string(std::string_view s) {
  if (s == "zero_state") return ConstraintKind::kZeroState;
  if (s == "const_state") return ConstraintKind::kConstState;
  if (s == "zero_affine") return ConstraintKind::kZeroAffine;
  if (s == "const_affine") return ConstraintKind::kConstAffine;
  throw ModelError("unknown constraint kind '" + std::string(s) + "'");
}

std::optional<std::size_t> AffineControlSystem::state_index(std::string_view name) const {
  auto it = std::find(state.begin(), state.end(), name);
  if (it == state.end()) return std::nullopt;
  return static_cast<std::size_t>(it - state.begin());
}

std::optional<std::size_t> AffineControlSystem::input_index(std::string_view name) const {
  auto it = std::find(inputs.begin(), inputs.end(), name);
  if (it == inputs.end()) return std::nullopt;
  return static_cast<std::size_t>(it - inputs.begin());
}

std::vector<VarId> AffineControlSystem::state_ids() const {
  std::vector<VarId> ids;
  ids.reserve(state.size());
  for (const auto& s : state) ids.push_back(intern_variable(s));
  return ids;
}

std::vector<std::vector<Expr>> AffineControlSystem::all_fields() const {
  std::vector<std::vector<Expr>> out;
  out.reserve(fields.size() + 1);
  out.push_back(drift);
  out.insert(out.end(), fields.begin(), fields.end());
  return out;
}

// ---------------------------------------------------------------------------
// validate

namespace {

void check_unique(const std::vector<std::string>& names, const char* what,
                  std::vector<std::string>& diags) {
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (!seen.insert(n).second) diags.push_back("duplicate " + std::string(what) + " name '" + n + "'");
  }
}

}  // namespace

std::vector<std::string> validate(const AffineControlSystem& sys) {
  std::vector<std::string> diags;
  check_unique(sys.state, "state", diags);
  check_unique(sys.inputs, "input", diags);
  check_unique(sys.constants, "constant", diags);

  const std::set<std::string> state(sys.state.begin(), sys.state.end());
  const std::set<std::string> inputs(sys.inputs.begin(), sys.inputs.end());
  const std::set<std::string> constants(sys.constants.begin(), sys.constants.end());
  for (const auto& s : sys.state) {
    if (inputs.count(s)) diags.push_back("'" + s + "' is both a state and an input");
    if (constants.count(s)) diags.push_back("'" + s + "' is both a state and a constant");
  }
  for (const auto& u : sys.inputs) {
    if (constants.count(u)) diags.push_back("'" + u + "' is both an input and a constant");
  }

  // Free variables of model expressions must be state or constants.
  auto check_vars = [&](const Expr& e, const std::string& where, bool allow_inputs) {
    for (const auto& v : e.free_variables().names()) {
      if (state.count(v) || constants.count(v)) continue;
      if (inputs.count(v)) {
        if (!allow_inputs) diags.push_back("input '" + v + "' appears in " + where);
      } else {
        diags.push_back("unknown variable '" + v + "' in " + where);
      }
    }
  };

  const std::size_t n = sys.state.size();
  if (sys.drift.size() != n) {
    diags.push_back("drift has " + std::to_string(sys.drift.size()) + " entries, expected " +
                    std::to_string(n));
  }
  for (const auto& e : sys.drift) check_vars(e, "drift", false);

  if (sys.fields.size() != sys.inputs.size()) {
    diags.push_back("model has " + std::to_string(sys.fields.size()) + " input fields for " +
                    std::to_string(sys.inputs.size()) + " inputs");
  }
  for (std::size_t i = 0; i < sys.fields.size(); ++i) {
    const std::string name = "f_" + std::to_string(i + 1);
    if (sys.fields[i].size() != n) {
      diags.push_back(name + " has " + std::to_string(sys.fields[i].size()) + " entries, expected " +
                      std::to_string(n));
    }
    for (const auto& e : sys.fields[i]) check_vars(e, name, false);
  }

  std::set<std::string> out_names;
  for (const auto& o : sys.outputs) {
    if (!out_names.insert(o.name).second) diags.push_back("duplicate output name '" + o.name + "'");
    check_vars(o.expr, "output '" + o.name + "'", false);
  }

  for (std::size_t k = 0; k < sys.constraints.size(); ++k) {
    const auto& c = sys.constraints[k];
    const std::string where = "constraint " + std::to_string(k + 1);
    const bool affine = c.kind == ConstraintKind::kZeroAffine || c.kind == ConstraintKind::kConstAffine;
    if (!affine && !c.input_terms.empty()) diags.push_back(where + " is state-only but has input terms");
    if (affine && c.input_terms.empty()) diags.push_back(where + " is input-affine but has no input terms");
    check_vars(c.c0, where, false);
    for (const auto& t : c.input_terms) {
      if (!inputs.count(t.input)) diags.push_back(where + " names unknown input '" + t.input + "'");
      check_vars(t.coeff, where, false);
    }
    if (c.solve_for) {
      const bool ok = affine ? inputs.count(*c.solve_for) > 0 : state.count(*c.solve_for) > 0;
      if (!ok) diags.push_back(where + " solves for unknown variable '" + *c.solve_for + "'");
    }
  }
  return diags;
}

// ---------------------------------------------------------------------------
// conversions

namespace {

bool generically_zero(const Expr& e, const ConversionOptions& opts) {
  return equals_random(e, Expr(0), opts.trials, opts.seed);
}

std::string fresh_name(const AffineControlSystem& sys, const std::string& stem) {
  std::set<std::string> used(sys.state.begin(), sys.state.end());
  used.insert(sys.inputs.begin(), sys.inputs.end());
  used.insert(sys.constants.begin(), sys.constants.end());
  for (const auto& o : sys.outputs) used.insert(o.name);
  if (!used.count(stem)) return stem;
  for (int k = 2;; ++k) {
    std::string candidate = stem + "_" + std::to_string(k);
    if (!used.count(candidate)) return candidate;
  }
}

std::string fresh_output_name(const AffineControlSystem& sys, const std::string& stem) {
  std::set<std::string> used;
  for (const auto& o : sys.outputs) used.insert(o.name);
  if (!used.count(stem)) return stem;
  for (int k = 2;; ++k) {
    std::string candidate = stem + "_" + std::to_string(k);
    if (!used.count(candidate)) return candidate;
  }
}

void require_valid(const AffineControlSystem& sys) {
  auto diags = validate(sys);
  if (!diags.empty()) throw ModelError("invalid model: " + diags.front());
}

/// Adds an unknown constant parameter d to the state with zero dynamics.
AffineControlSystem augment_constant(const AffineControlSystem& sys, const std::string& name) {
  AffineControlSystem out = sys;
  out.state.push_back(name);
  out.drift.emplace_back(0);
  for (auto& f : out.fields) f.emplace_back(0);
  return out;
}

std::string param_name(const AffineControlSystem& sys, const Constraint& con) {
  if (con.param) {
    if (sys.state_index(*con.param) || sys.input_index(*con.param) ||
        std::find(sys.constants.begin(), sys.constants.end(), *con.param) != sys.constants.end()) {
      throw ModelError("constraint parameter '" + *con.param + "' clashes with an existing name");
    }
    return *con.param;
  }
  return fresh_name(sys, "d");
}

/// Substitutes x_p := value everywhere and drops x_p from the state.
AffineControlSystem eliminate_state(const AffineControlSystem& sys, std::size_t p, const Expr& value) {
  const std::map<std::string, Expr> bind{{sys.state[p], value}};
  AffineControlSystem out;
  out.inputs = sys.inputs;
  out.constants = sys.constants;
  for (std::size_t k = 0; k < sys.state.size(); ++k) {
    if (k == p) continue;
    out.state.push_back(sys.state[k]);
    out.drift.push_back(substitute(sys.drift[k], bind));
  }
  for (const auto& f : sys.fields) {
    std::vector<Expr> nf;
    for (std::size_t k = 0; k < f.size(); ++k) {
      if (k != p) nf.push_back(substitute(f[k], bind));
    }
    out.fields.push_back(std::move(nf));
  }
  for (const auto& o : sys.outputs) out.outputs.push_back({o.name, substitute(o.expr, bind)});
  for (const auto& c : sys.constraints) {
    Constraint nc = c;
    nc.c0 = substitute(c.c0, bind);
    for (auto& t : nc.input_terms) t.coeff = substitute(t.coeff, bind);
    out.constraints.push_back(std::move(nc));
  }
  return out;
}

/// System 2 elimination of a state variable from 0 = c(x). Variables in
/// `excluded` are never auto-selected.
AffineControlSystem solve_state_constraint(const AffineControlSystem& sys, const Expr& c,
                                           const std::optional<std::string>& solve_for,
                                           const std::set<std::string>& excluded,
                                           const ConversionOptions& opts) {
  Differentiator diff;
  auto attempt = [&](std::size_t p, bool strict) -> std::optional<Expr> {
    const VarId v = intern_variable(sys.state[p]);
    const Expr coeff = diff(c, v);
    if (generically_zero(coeff, opts)) {
      if (strict) throw CoefficientGenericallyZero(sys.state[p]);
      return std::nullopt;
    }
    if (!generically_zero(diff(coeff, v), opts)) {
      if (strict) throw NotAffineInVariable(sys.state[p]);
      return std::nullopt;
    }
    const std::map<std::string, Expr> at_zero{{sys.state[p], Expr(0)}};
    return make_neg(make_div(substitute(c, at_zero), substitute(coeff, at_zero)));
  };

  if (solve_for) {
    auto p = sys.state_index(*solve_for);
    if (!p) throw ModelError("'" + *solve_for + "' is not a state variable");
    return eliminate_state(sys, *p, *attempt(*p, true));
  }
  for (std::size_t p = 0; p < sys.state.size(); ++p) {
    if (excluded.count(sys.state[p]) || !c.depends_on(intern_variable(sys.state[p]))) continue;
    if (auto value = attempt(p, false)) return eliminate_state(sys, p, *value);
  }
  throw NoSolvableVariable();
}

void check_state_only(const AffineControlSystem& sys, const Expr& e, const char* what) {
  for (const auto& v : e.free_variables().names()) {
    if (sys.input_index(v)) {
      throw NotAffineInInput(std::string(what) + " of the constraint depends on input '" + v + "'");
    }
  }
}

}  // namespace

AffineControlSystem convert_zero_state(const AffineControlSystem& sys, const Constraint& con,
                                       const ConversionOptions& opts) {
  if (!con.input_terms.empty()) throw ModelError("state constraint carries input terms");
  require_valid(sys);
  return solve_state_constraint(sys, con.c0, con.solve_for, {}, opts);
}

AffineControlSystem convert_const_state(const AffineControlSystem& sys, const Constraint& con,
                                        const ConversionOptions& opts) {
  if (!con.input_terms.empty()) throw ModelError("state constraint carries input terms");
  require_valid(sys);
  const std::string d = param_name(sys, con);
  if (con.solve_for && *con.solve_for == d) throw SolveForIsD();
  // d = c(x)  becomes the output  c(x) - d == 0, discharged at once by substitution.
  const AffineControlSystem augmented = augment_constant(sys, d);
  return solve_state_constraint(augmented, con.c0 - Expr::variable(d), con.solve_for, {d}, opts);
}

AffineControlSystem convert_zero_affine(const AffineControlSystem& sys, const Constraint& con,
                                        const ConversionOptions& opts) {
  if (con.input_terms.empty()) throw ModelError("input-affine constraint has no input terms");
  require_valid(sys);
  check_state_only(sys, con.c0, "c0");

  // Merge repeated inputs, drop generically vanishing coefficients.
  std::vector<InputTerm> terms;
  for (const auto& t : con.input_terms) {
    if (!sys.input_index(t.input)) throw ModelError("'" + t.input + "' is not an input");
    check_state_only(sys, t.coeff, "a coefficient");
    auto it = std::find_if(terms.begin(), terms.end(), [&](const auto& x) { return x.input == t.input; });
    if (it != terms.end()) {
      it->coeff = it->coeff + t.coeff;
    } else {
      terms.push_back(t);
    }
  }
  std::erase_if(terms, [&](const InputTerm& t) { return generically_zero(t.coeff, opts); });

  // Pick u_o.
  std::size_t o = terms.size();
  if (con.solve_for) {
    if (!sys.input_index(*con.solve_for)) throw ModelError("'" + *con.solve_for + "' is not an input");
    for (std::size_t k = 0; k < terms.size(); ++k) {
      if (terms[k].input == *con.solve_for) o = k;
    }
    if (o == terms.size()) throw CoefficientGenericallyZero(*con.solve_for);
  } else {
    std::size_t best = sys.inputs.size();
    for (std::size_t k = 0; k < terms.size(); ++k) {
      const std::size_t idx = *sys.input_index(terms[k].input);
      if (idx < best) {
        best = idx;
        o = k;
      }
    }
    if (o == terms.size()) throw NoSolvableVariable();
  }
  const std::string u_o = terms[o].input;
  const Expr c_o = terms[o].coeff;
  std::vector<InputTerm> promoted;  // u_r
  for (std::size_t k = 0; k < terms.size(); ++k) {
    if (k != o) promoted.push_back(terms[k]);
  }

  // u_o = c'(x, u_r) = -(c0 + sum_r c_r u_r) / c_o, with u_r read as new state variables.
  std::vector<Expr> numer{con.c0};
  for (const auto& t : promoted) numer.push_back(t.coeff * Expr::variable(t.input));
  const Expr solved = make_neg(make_div(make_add(numer), c_o));

  const std::size_t io = *sys.input_index(u_o);
  const auto& f_o = sys.fields[io];
  const std::size_t n = sys.state.size();

  std::set<std::string> constrained{u_o};
  for (const auto& t : promoted) constrained.insert(t.input);

  AffineControlSystem out;
  out.constants = sys.constants;
  out.state = sys.state;
  for (const auto& t : promoted) out.state.push_back(t.input);

  // Drift absorbs f_o * c'(x, u_r) now that every u_r is state.
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<Expr> terms_k{sys.drift[k]};
    if (!f_o[k].is_zero()) terms_k.push_back(f_o[k] * solved);
    for (const auto& t : promoted) {
      const auto& f_l = sys.fields[*sys.input_index(t.input)];
      if (!f_l[k].is_zero()) terms_k.push_back(f_l[k] * Expr::variable(t.input));
    }
    out.drift.push_back(make_add(std::move(terms_k)));
  }
  for (std::size_t r = 0; r < promoted.size(); ++r) out.drift.emplace_back(0);

  for (std::size_t i = 0; i < sys.inputs.size(); ++i) {
    if (constrained.count(sys.inputs[i])) continue;
    out.inputs.push_back(sys.inputs[i]);
    auto f = sys.fields[i];
    f.resize(out.state.size(), Expr(0));
    out.fields.push_back(std::move(f));
  }
  for (std::size_t r = 0; r < promoted.size(); ++r) {
    AffineControlSystem names_so_far = out;
    names_so_far.inputs.insert(names_so_far.inputs.end(), sys.inputs.begin(), sys.inputs.end());
    out.inputs.push_back(fresh_name(names_so_far, promoted[r].input + "_dot"));
    std::vector<Expr> f(out.state.size(), Expr(0));
    f[n + r] = Expr(1);
    out.fields.push_back(std::move(f));
  }

  out.outputs = sys.outputs;
  for (const auto& t : promoted) {
    out.outputs.push_back({fresh_output_name(out, t.input), Expr::variable(t.input)});
  }
  out.outputs.push_back({fresh_output_name(out, u_o), solved});

  // Pending constraints: u_o terms become c' terms, u_r terms move into c0.
  for (const auto& c : sys.constraints) {
    Constraint nc = c;
    nc.input_terms.clear();
    std::vector<Expr> c0{c.c0};
    for (const auto& t : c.input_terms) {
      if (t.input == u_o) {
        c0.push_back(t.coeff * solved);
      } else if (constrained.count(t.input)) {
        c0.push_back(t.coeff * Expr::variable(t.input));
      } else {
        nc.input_terms.push_back(t);
      }
    }
    nc.c0 = make_add(std::move(c0));
    if (nc.solve_for && constrained.count(*nc.solve_for)) nc.solve_for.reset();
    out.constraints.push_back(std::move(nc));
  }

  for (const auto& d : validate(out)) {
    if (d.rfind("input '", 0) == 0) throw AffinityBrokenAfterSubstitution(d);
  }
  return out;
}

AffineControlSystem convert_const_affine(const AffineControlSystem& sys, const Constraint& con,
                                         const ConversionOptions& opts) {
  require_valid(sys);
  const std::string d = param_name(sys, con);
  if (con.solve_for && *con.solve_for == d) throw SolveForIsD();
  Constraint shifted = con;
  shifted.kind = ConstraintKind::kZeroAffine;
  shifted.c0 = con.c0 - Expr::variable(d);
  shifted.param.reset();
  return convert_zero_affine(augment_constant(sys, d), shifted, opts);
}

AffineControlSystem apply_constraints(const AffineControlSystem& sys, const ConversionOptions& opts) {
  AffineControlSystem cur = sys;
  while (!cur.constraints.empty()) {
    const Constraint con = cur.constraints.front();
    cur.constraints.erase(cur.constraints.begin());
    switch (con.kind) {
      case ConstraintKind::kZeroState:
        cur = convert_zero_state(cur, con, opts);
        break;
      case ConstraintKind::kConstState:
        cur = convert_const_state(cur, con, opts);
        break;
      case ConstraintKind::kZeroAffine:
        cur = convert_zero_affine(cur, con, opts);
        break;
      case ConstraintKind::kConstAffine:
        cur = convert_const_affine(cur, con, opts);
        break;
    }
  }
  return cur;
}

}  // namespace noct
