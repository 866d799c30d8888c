#include <fstream>
#include <sstream>

#include "json.hpp"

#include "noct/io.hpp"

namespace noct::io {

using json = nlohmann::ordered_json;

namespace {

std::vector<std::string> string_list(const json& j, const char* key) {
  if (!j.contains(key)) return {};
  const auto& v = j.at(key);
  if (!v.is_array()) throw ModelError(std::string("'") + key + "' must be an array of names");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) throw ModelError(std::string("'") + key + "' must contain only strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

Expr expr_of(const json& j, const std::string& where) {
  if (j.is_number_integer()) return Expr(Rational(j.dump()));
  if (!j.is_string()) throw ModelError(where + " must be an expression string");
  try {
    return parse(j.get<std::string>());
  } catch (const Error& e) {
    throw ModelError(where + ": " + e.what());
  }
}

std::vector<Expr> expr_list(const json& j, const std::string& where) {
  if (!j.is_array()) throw ModelError(where + " must be an array of expressions");
  std::vector<Expr> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(expr_of(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

Constraint constraint_of(const json& j, const std::string& where) {
  if (!j.is_object()) throw ModelError(where + " must be an object");
  Constraint c;
  if (!j.contains("kind") || !j["kind"].is_string()) throw ModelError(where + " needs a string 'kind'");
  c.kind = constraint_kind_from_string(j["kind"].get<std::string>());
  c.c0 = j.contains("c0") ? expr_of(j["c0"], where + ".c0") : Expr(0);
  if (j.contains("input_terms")) {
    const auto& terms = j["input_terms"];
    if (!terms.is_array()) throw ModelError(where + ".input_terms must be an array");
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const auto& t = terms[i];
      const std::string tw = where + ".input_terms[" + std::to_string(i) + "]";
      if (!t.is_object() || !t.contains("input") || !t["input"].is_string()) {
        throw ModelError(tw + " needs a string 'input'");
      }
      c.input_terms.push_back({t["input"].get<std::string>(),
                               t.contains("coeff") ? expr_of(t["coeff"], tw + ".coeff") : Expr(1)});
    }
  }
  for (const char* key : {"solve_for", "param"}) {
    if (!j.contains(key)) continue;
    if (!j[key].is_string()) throw ModelError(where + "." + key + " must be a string");
    (std::string(key) == "param" ? c.param : c.solve_for) = j[key].get<std::string>();
  }
  return c;
}

std::vector<Constraint> constraint_list(const json& j, const std::string& where) {
  if (!j.is_array()) throw ModelError(where + " must be an array");
  std::vector<Constraint> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(constraint_of(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

json constraint_json(const Constraint& c) {
  json j;
  j["kind"] = to_string(c.kind);
  j["c0"] = to_string(c.c0);
  if (!c.input_terms.empty()) {
    json terms = json::array();
    for (const auto& t : c.input_terms) terms.push_back({{"input", t.input}, {"coeff", to_string(t.coeff)}});
    j["input_terms"] = std::move(terms);
  }
  if (c.solve_for) j["solve_for"] = *c.solve_for;
  if (c.param) j["param"] = *c.param;
  return j;
}

json rational_vector(const std::vector<Rational>& v) {
  json a = json::array();
  for (const auto& x : v) a.push_back(rational_to_string(x));
  return a;
}

json expr_vector(const std::vector<Expr>& v) {
  json a = json::array();
  for (const auto& e : v) a.push_back(to_string(e));
  return a;
}

}  // namespace

AffineControlSystem ModelFile::with_constraints(const std::string& set) const {
  AffineControlSystem sys = system;
  if (set.empty()) return sys;
  for (const auto& [name, cons] : constraint_sets) {
    if (name == set) {
      sys.constraints.insert(sys.constraints.end(), cons.begin(), cons.end());
      return sys;
    }
  }
  throw ModelError("model has no constraint set named '" + set + "'");
}

ModelFile parse_model(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ModelError(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ModelError("model file must be a JSON object");

  ModelFile mf;
  auto& sys = mf.system;
  sys.state = string_list(j, "state");
  sys.inputs = string_list(j, "inputs");
  sys.constants = string_list(j, "constants");
  if (!j.contains("drift")) throw ModelError("model has no 'drift'");
  sys.drift = expr_list(j["drift"], "drift");
  if (j.contains("fields")) {
    const auto& f = j["fields"];
    if (!f.is_array()) throw ModelError("'fields' must be an array");
    for (std::size_t i = 0; i < f.size(); ++i) sys.fields.push_back(expr_list(f[i], "f_" + std::to_string(i + 1)));
  }
  if (j.contains("outputs")) {
    const auto& o = j["outputs"];
    if (!o.is_object()) throw ModelError("'outputs' must be an object of name: expression");
    for (const auto& [name, e] : o.items()) sys.outputs.push_back({name, expr_of(e, "output '" + name + "'")});
  }
  if (j.contains("constraints")) sys.constraints = constraint_list(j["constraints"], "constraints");
  if (j.contains("constraint_sets")) {
    const auto& cs = j["constraint_sets"];
    if (!cs.is_object()) throw ModelError("'constraint_sets' must be an object");
    for (const auto& [name, list] : cs.items()) {
      mf.constraint_sets.emplace_back(name, constraint_list(list, "constraint_sets." + name));
    }
  }
  if (auto diags = validate(sys); !diags.empty()) throw ModelError("invalid model: " + diags.front());
  return mf;
}

ModelFile read_model(const std::string& path) { return parse_model(read_file(path)); }

std::string dump_model(const AffineControlSystem& sys, const ModelFile* extra_sets) {
  json j;
  j["state"] = sys.state;
  j["inputs"] = sys.inputs;
  j["constants"] = sys.constants;
  j["drift"] = expr_vector(sys.drift);
  json fields = json::array();
  for (const auto& f : sys.fields) fields.push_back(expr_vector(f));
  j["fields"] = std::move(fields);
  json outputs = json::object();
  for (const auto& o : sys.outputs) outputs[o.name] = to_string(o.expr);
  j["outputs"] = std::move(outputs);
  json cons = json::array();
  for (const auto& c : sys.constraints) cons.push_back(constraint_json(c));
  j["constraints"] = std::move(cons);
  if (extra_sets && !extra_sets->constraint_sets.empty()) {
    json sets = json::object();
    for (const auto& [name, list] : extra_sets->constraint_sets) {
      json a = json::array();
      for (const auto& c : list) a.push_back(constraint_json(c));
      sets[name] = std::move(a);
    }
    j["constraint_sets"] = std::move(sets);
  }
  return j.dump(2) + "\n";
}

std::string dump_report(const ObservabilityReport& rep, const ReportSettings& settings) {
  json j;
  j["model"] = settings.model;
  j["constraints"] = settings.constraints;
  j["settings"] = {{"points", settings.points}, {"max_order", settings.max_order}, {"seed", settings.seed}};
  j["state"] = rep.state;
  j["state_dim"] = rep.state_dim;
  j["final_rank"] = rep.final_rank;
  j["kernel_dim"] = rep.kernel_dim();
  j["fully_observable"] = rep.final_rank == rep.state_dim;
  j["order"] = rep.order;
  j["truncated"] = rep.truncated;
  json hist = json::array();
  for (const auto& [k, r] : rep.rank_history) hist.push_back({{"order", k}, {"rank", r}});
  j["rank_history"] = std::move(hist);
  json cls = json::object();
  for (const auto& [name, c] : rep.classification) cls[name] = to_string(c);
  j["classification"] = std::move(cls);
  j["basis_words"] = rep.basis_words;
  json nb = json::array();
  for (const auto& m : rep.null_basis_numeric) {
    json cols = json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) cols.push_back(rational_vector(m.column(c)));
    nb.push_back(std::move(cols));
  }
  j["null_basis_numeric"] = std::move(nb);
  json vn = json::array();
  for (const auto& v : rep.verified_null_vectors) vn.push_back(expr_vector(v));
  j["verified_null_vectors"] = std::move(vn);
  j["sample_seeds"] = rep.sample_seeds;
  j["warnings"] = rep.warnings;
  return j.dump(2) + "\n";
}

std::vector<std::vector<Expr>> parse_vectors(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ModelError(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("vectors") || !j["vectors"].is_array()) {
    throw ModelError("vector file must be an object with a 'vectors' array");
  }
  std::vector<std::vector<Expr>> out;
  for (std::size_t i = 0; i < j["vectors"].size(); ++i) {
    out.push_back(expr_list(j["vectors"][i], "vectors[" + std::to_string(i) + "]"));
  }
  return out;
}

std::vector<std::vector<Expr>> read_vectors(const std::string& path) { return parse_vectors(read_file(path)); }

std::string dump_vectors(const std::vector<std::vector<Expr>>& vectors) {
  json a = json::array();
  for (const auto& v : vectors) a.push_back(expr_vector(v));
  json j;
  j["vectors"] = std::move(a);
  return j.dump(2) + "\n";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace noct::io
