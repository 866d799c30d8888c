#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "noct/errors.hpp"
#include "noct/io.hpp"
#include "noct/models.hpp"
#include "noct/observability.hpp"
#include "noct/sim/runner.hpp"

namespace {

// Exit codes.
constexpr int kOk = 0;
constexpr int kNotNull = 1;
constexpr int kUsage = 2;
constexpr int kTruncated = 3;
constexpr int kDiverged = 4;

struct Global {
  int points = noct::AnalysisOptions{}.points;
  int max_order = noct::AnalysisOptions{}.max_order;
  std::uint64_t seed = 0;
  bool json_errors = false;
};

std::uint64_t effective_seed(std::uint64_t flag) {
  const char* env = std::getenv("NOCT_SEED");
  if (!env || !*env) return flag;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (*end != '\0') throw noct::Error(std::string("NOCT_SEED is not an unsigned integer: '") + env + "'");
  return v;
}

const char* error_type(const std::exception& e) {
  if (dynamic_cast<const noct::DimensionMismatch*>(&e)) return "DimensionMismatch";
  if (dynamic_cast<const noct::CoefficientGenericallyZero*>(&e)) return "CoefficientGenericallyZero";
  if (dynamic_cast<const noct::AffinityBrokenAfterSubstitution*>(&e)) return "AffinityBrokenAfterSubstitution";
  if (dynamic_cast<const noct::ModelError*>(&e)) return "ModelError";
  if (dynamic_cast<const noct::sim::FilterDiverged*>(&e)) return "FilterDiverged";
  if (dynamic_cast<const noct::Error*>(&e)) return "Error";
  return "InternalError";
}

int report_error(const Global& g, const std::exception& e, int code) {
  if (g.json_errors) {
    nlohmann::ordered_json j;
    j["error"] = {{"type", error_type(e)}, {"message", e.what()}, {"exit_code", code}};
    std::cerr << j.dump() << "\n";
  } else {
    std::cerr << "noct: " << e.what() << "\n";
  }
  return code;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    noct::io::write_file(path, text);
  }
}

noct::AnalysisOptions analysis_options(const Global& g) {
  noct::AnalysisOptions opts;
  opts.points = g.points;
  opts.max_order = g.max_order;
  opts.seed = effective_seed(g.seed);
  return opts;
}

struct AnalyzeArgs {
  std::string model, constraints, out, null_vectors;
};

int cmd_analyze(const Global& g, const AnalyzeArgs& a) {
  const auto mf = noct::io::read_model(a.model);
  const auto opts = analysis_options(g);
  std::vector<std::vector<noct::Expr>> candidates;
  if (!a.null_vectors.empty()) candidates = noct::io::read_vectors(a.null_vectors);
  const auto rep = noct::analyze(mf.with_constraints(a.constraints), opts, candidates);
  noct::io::ReportSettings settings{opts.points, opts.max_order, opts.seed, a.model, a.constraints};
  emit(noct::io::dump_report(rep, settings), a.out);
  if (rep.truncated) {
    std::cerr << "noct: analysis stopped at order " << rep.order << " before the rank saturated\n";
    return kTruncated;
  }
  return kOk;
}

struct ConvertArgs {
  std::string model, constraints, out;
};

int cmd_convert(const Global& g, const ConvertArgs& a) {
  const auto mf = noct::io::read_model(a.model);
  const auto sys = noct::apply_constraints(mf.with_constraints(a.constraints), {noct::kDefaultTrials, effective_seed(g.seed)});
  emit(noct::io::dump_model(sys), a.out);
  return kOk;
}

struct SimulateArgs {
  std::string scenario, out_dir = ".", linearization = "truth";
  int runs = 5;
};

int cmd_simulate(const Global& g, const SimulateArgs& a) {
  if (a.runs < 1) throw noct::Error("--runs must be at least 1");
  auto sc = noct::sim::named_scenario(a.scenario);
  sc.linearization = noct::sim::linearization_from_string(a.linearization);
  const auto results = noct::sim::run_batch(sc, a.runs, effective_seed(g.seed));
  std::filesystem::create_directories(a.out_dir);
  const std::filesystem::path dir(a.out_dir);
  bool diverged = false;
  for (const auto& r : results) {
    noct::io::write_file((dir / r.csv_name()).string(), r.csv());
    if (r.diverged) {
      diverged = true;
      std::cerr << "noct: run with seed " << r.seed << " diverged: " << r.message << "\n";
    }
  }
  noct::io::write_file((dir / (a.scenario + "_summary.json")).string(), noct::sim::summary_json(results));
  return diverged ? kDiverged : kOk;
}

struct CheckNullArgs {
  std::string model, vectors, constraints;
};

int cmd_check_null(const Global& g, const CheckNullArgs& a) {
  const auto mf = noct::io::read_model(a.model);
  const auto vectors = noct::io::read_vectors(a.vectors);
  const auto opts = analysis_options(g);
  const auto sys = noct::apply_constraints(mf.with_constraints(a.constraints), {noct::kDefaultTrials, opts.seed});
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].size() != sys.state_dim()) {
      throw noct::DimensionMismatch("vector " + std::to_string(i + 1) + " has " + std::to_string(vectors[i].size()) +
                                    " entries, converted state has " + std::to_string(sys.state_dim()));
    }
  }
  const auto cod = noct::build_codistribution(sys, opts);
  bool all = true;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const bool ok = noct::verify_null_vector(cod, vectors[i]);
    std::cout << "vector " << i + 1 << ": " << (ok ? "null" : "not null") << "\n";
    all = all && ok;
  }
  return all ? kOk : kNotNull;
}

struct ExportArgs {
  std::string out, null_dir;
};

int cmd_export_vio(const ExportArgs& a) {
  noct::io::ModelFile mf;
  mf.system = noct::models::vio_system();
  for (auto kind : {noct::models::VioConstraint::kConstLocalAccel, noct::models::VioConstraint::kSingleAxisZ,
                    noct::models::VioConstraint::kPureTranslation}) {
    mf.constraint_sets.emplace_back(noct::models::to_string(kind), noct::models::vio_constraints(kind));
  }
  emit(noct::io::dump_model(mf.system, &mf), a.out);
  if (!a.null_dir.empty()) {
    std::filesystem::create_directories(a.null_dir);
    for (const auto& r : noct::models::vio_expected_results()) {
      if (r.null_vectors.empty()) continue;
      noct::io::write_file((std::filesystem::path(a.null_dir) / (r.name + ".json")).string(),
                           noct::io::dump_vectors(r.null_vectors));
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"noct: nonlinear observability toolkit"};
  app.require_subcommand(1);
  Global g;
  app.add_option("--points", g.points, "Random sample points")->check(CLI::PositiveNumber);
  app.add_option("--max-order", g.max_order, "Highest Lie derivative order")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", g.seed, "Seed for sample points and simulation (NOCT_SEED overrides)");
  app.add_flag("--json-errors", g.json_errors, "Print errors as JSON on standard error");
  app.fallthrough();

  AnalyzeArgs aa;
  auto* analyze = app.add_subcommand("analyze", "Observability analysis of a model file");
  analyze->add_option("model", aa.model, "Model file")->required();
  analyze->add_option("--constraints", aa.constraints, "Constraint set to apply");
  analyze->add_option("--out,-o", aa.out, "Report path (default: standard output)");
  analyze->add_option("--null-vectors", aa.null_vectors, "Candidate null vectors to verify");

  ConvertArgs ca;
  auto* convert = app.add_subcommand("convert", "Emit the constraint-free standard form");
  convert->add_option("model", ca.model, "Model file")->required();
  convert->add_option("--constraints", ca.constraints, "Constraint set to apply");
  convert->add_option("--out,-o", ca.out, "Output path (default: standard output)");

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo runs of a simulation scenario");
  simulate->add_option("scenario", sa.scenario, "Scenario name")->required();
  simulate->add_option("--runs", sa.runs, "Number of seeds");
  simulate->add_option("--out-dir", sa.out_dir, "Directory for CSVs and the summary");
  simulate->add_option("--linearization", sa.linearization, "Jacobian point: truth or fej");

  CheckNullArgs na;
  auto* check = app.add_subcommand("check-null", "Verify candidate null vectors");
  check->add_option("model", na.model, "Model file")->required();
  check->add_option("vectors", na.vectors, "Vector file")->required();
  check->add_option("--constraints", na.constraints, "Constraint set to apply");

  ExportArgs ea;
  auto* exp = app.add_subcommand("export-vio", "Write the VIO model and its expected null vectors");
  exp->add_option("--out,-o", ea.out, "Model path (default: standard output)");
  exp->add_option("--null-vectors", ea.null_dir, "Directory for null vector files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*analyze) return cmd_analyze(g, aa);
    if (*convert) return cmd_convert(g, ca);
    if (*simulate) return cmd_simulate(g, sa);
    if (*check) return cmd_check_null(g, na);
    if (*exp) return cmd_export_vio(ea);
  } catch (const noct::Error& e) {
    return report_error(g, e, kUsage);
  } catch (const std::exception& e) {
    return report_error(g, e, kUsage);
  }
  return kUsage;
}
