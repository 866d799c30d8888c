#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "linear_oracle.hpp"
#include "noct/io.hpp"
#include "noct/models.hpp"
#include "noct/observability.hpp"
#include "noct/sim/runner.hpp"
#include "random_systems.hpp"

using namespace noct;
using Eigen::Matrix3d;
using Eigen::Vector3d;

namespace {

// Pinned tolerances and budgets.
constexpr double kAnalysisBudgetSec = 60.0;
constexpr double kLieRelTol = 1e-4;
constexpr int kLieInstants = 50;
constexpr double kFdStep = 1e-5;
constexpr int kSimSeeds = 5;
constexpr int kSimRequired = 4;
constexpr double kRunBudgetSec = 120.0;
constexpr double kTdErrorTol = 5e-3;
constexpr int kLinearSystems = 20;
constexpr int kRandomConversions = 50;

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail.clear();
    pass = false;
    detail += (detail.empty() ? "" : "; ") + why;
  }
  void note(const std::string& what) {
    if (pass) detail += (detail.empty() ? "" : "; ") + what;
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : ",") + s;
  return out;
}

std::set<std::string> names3(const std::string& stem) { return {stem + "_x", stem + "_y", stem + "_z"}; }

std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

AffineControlSystem vio_with(models::VioConstraint kind) {
  auto sys = models::vio_system();
  sys.constraints = models::vio_constraints(kind);
  return sys;
}

// ---- 1 ----

Outcome criterion1() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto rep = analyze(models::vio_system());
  const double dt = seconds_since(t0);
  if (rep.state_dim != 21) o.fail("state dim " + std::to_string(rep.state_dim));
  if (rep.final_rank != 21) o.fail("rank " + std::to_string(rep.final_rank));
  if (!rep.indeterminable().empty()) o.fail("indeterminable " + join(rep.indeterminable()));
  if (dt >= kAnalysisBudgetSec) o.fail("runtime " + std::to_string(dt) + " s");
  char buf[96];
  std::snprintf(buf, sizeof buf, "rank %zu of %zu, all observable, %.2f s", rep.final_rank, rep.state_dim, dt);
  o.note(buf);
  return o;
}

// ---- 2 ----

Outcome criterion2() {
  Outcome o;
  const auto sys = apply_constraints(vio_with(models::VioConstraint::kConstLocalAccel));
  const auto cod = build_codistribution(sys);
  const auto rep = classify_variables(cod);
  if (sys.state_dim() != 24) o.fail("converted dim " + std::to_string(sys.state_dim()));
  if (rep.kernel_dim() != 1) o.fail("kernel dim " + std::to_string(rep.kernel_dim()));

  std::set<std::string> want = names3("v");
  for (const auto& s : {names3("ba"), names3("p"), names3("d")}) want.insert(s.begin(), s.end());
  want.insert("rho");
  if (as_set(rep.indeterminable()) != want) o.fail("indeterminable {" + join(rep.indeterminable()) + "}");

  // Exact proportionality of the kernel's first 21 coordinates to the
  // printed vector, per sample point and per block.
  const auto printed = models::published_const_accel_vector();
  const std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> blocks = {
      {"v", {0, 3}}, {"g", {3, 6}}, {"bg", {6, 9}}, {"ba", {9, 12}}, {"p", {12, 15}}, {"q,gamma", {15, 20}},
      {"rho", {20, 21}}};
  std::set<std::string> bad_blocks;
  std::size_t ok_points = 0;
  for (std::size_t p = 0; p < cod.values.size(); ++p) {
    const RationalMatrix n = null_space(cod.values[p]);
    if (n.cols() != 1) continue;
    std::vector<Rational> pv;
    for (const auto& e : printed) pv.push_back(evaluate(e, cod.points[p]));
    // Scale from the v block, which both vectors share.
    Rational scale = 0;
    for (std::size_t i = 0; i < 3 && scale == 0; ++i) {
      if (pv[i] != 0) scale = n(i, 0) / pv[i];
    }
    bool point_ok = scale != 0;
    for (const auto& [name, range] : blocks) {
      for (std::size_t i = range.first; i < range.second; ++i) {
        if (n(i, 0) != scale * pv[i]) {
          bad_blocks.insert(name);
          point_ok = false;
        }
      }
    }
    if (point_ok) ++ok_points;
  }
  if (ok_points != cod.values.size()) {
    std::vector<std::string> b(bad_blocks.begin(), bad_blocks.end());
    o.fail("printed vector not proportional to kernel at " + std::to_string(cod.values.size() - ok_points) + "/" +
           std::to_string(cod.values.size()) + " points, blocks {" + join(b) + "}");
  }
  o.note("dim 24, kernel 1, printed vector proportional at all " + std::to_string(cod.values.size()) + " points");
  return o;
}

// ---- 3 and 4 ----

models::ExpectedResult expected(const std::string& name) {
  for (auto& r : models::vio_expected_results()) {
    if (r.name == name) return r;
  }
  throw Error("no expected result " + name);
}

Outcome criterion3() {
  Outcome o;
  const auto cod = build_codistribution(apply_constraints(vio_with(models::VioConstraint::kSingleAxisZ)));
  const auto rep = classify_variables(cod);
  if (rep.kernel_dim() != 1) o.fail("kernel dim " + std::to_string(rep.kernel_dim()));
  if (!verify_null_vector(cod, expected("single_axis_z").null_vectors.at(0))) o.fail("printed vector rejected");
  if (as_set(rep.indeterminable()) != names3("p")) o.fail("indeterminable {" + join(rep.indeterminable()) + "}");
  o.note("kernel 1, printed p_CB vector verified, indeterminable {p_x,p_y,p_z}");
  return o;
}

Outcome criterion4() {
  Outcome o;
  const auto cod = build_codistribution(apply_constraints(vio_with(models::VioConstraint::kPureTranslation)));
  const auto rep = classify_variables(cod);
  if (rep.kernel_dim() != 5) o.fail("kernel dim " + std::to_string(rep.kernel_dim()));
  const auto rows = expected("pure_translation").null_vectors;
  if (rows.size() != 5) o.fail("fixture has " + std::to_string(rows.size()) + " rows");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!verify_null_vector(cod, rows[i])) o.fail("row " + std::to_string(i + 1) + " rejected");
  }
  const auto ind = as_set(rep.indeterminable());
  for (const auto& s : {names3("g"), names3("ba"), names3("p")}) {
    for (const auto& n : s) {
      if (!ind.count(n)) o.fail(n + " not indeterminable");
    }
  }
  o.note("kernel 5, five rows verified, indeterminable {" + join(rep.indeterminable()) + "}");
  return o;
}

// ---- 5 ----

Outcome criterion5() {
  Outcome o;
  std::mt19937_64 rng(5);
  int deficient = 0;
  for (int t = 0; t < kLinearSystems; ++t) {
    const auto lc = fixtures::random_linear(rng);
    const std::size_t want = fixtures::kalman_rank(lc);
    if (want < lc.A.cols()) ++deficient;
    const auto cod = build_codistribution(fixtures::linear_system(lc), {5, 8, static_cast<std::uint64_t>(t)});
    if (cod.rank() != want) {
      o.fail("system " + std::to_string(t) + ": rank " + std::to_string(cod.rank()) + " vs Kalman " +
             std::to_string(want));
    }
  }
  o.note(std::to_string(kLinearSystems) + " systems agree (" + std::to_string(deficient) + " rank deficient)");
  return o;
}

// ---- 6 ----

struct VioTruth {
  Point point;                  // symbolic state and inputs
  std::vector<double> outputs;  // gamma_x, gamma_y, g.g
};

Rational exact(double x) { return Rational(x); }

// Symbolic VIO state along a simulated trajectory: body velocity and gravity,
// constant biases, camera extrinsics as (p_CB, trimmed q_CB), and a world
// landmark expressed in the camera frame.
VioTruth vio_truth(const sim::TrajectorySample& s, const Vector3d& bg, const Vector3d& ba,
                   const sim::Extrinsics& ext, const Vector3d& landmark) {
  const Matrix3d R_CB = ext.R_BC.transpose();
  const Vector3d p_CB = -R_CB * ext.p_BC;
  Eigen::Quaterniond q(R_CB);
  if (q.w() < 0) q.coeffs() *= -1;
  const Vector3d v_b = s.R.transpose() * s.v;
  const Vector3d g_b = s.R.transpose() * sim::gravity_world();
  const Vector3d l_c = R_CB * (s.R.transpose() * (landmark - s.p)) + p_CB;
  const Vector3d w_m = s.omega + bg;
  const Vector3d a_m = s.specific_force() + ba;

  VioTruth t;
  const char* ax[] = {"x", "y", "z"};
  const Vector3d qv(q.x() / q.w(), q.y() / q.w(), q.z() / q.w());
  for (int i = 0; i < 3; ++i) {
    t.point[std::string("v_") + ax[i]] = exact(v_b[i]);
    t.point[std::string("g_") + ax[i]] = exact(g_b[i]);
    t.point[std::string("bg_") + ax[i]] = exact(bg[i]);
    t.point[std::string("ba_") + ax[i]] = exact(ba[i]);
    t.point[std::string("p_") + ax[i]] = exact(p_CB[i]);
    t.point[std::string("q_") + ax[i]] = exact(qv[i]);
    t.point[std::string("w_") + ax[i]] = exact(w_m[i]);
    t.point[std::string("a_") + ax[i]] = exact(a_m[i]);
  }
  t.point["gamma_x"] = exact(l_c.x() / l_c.z());
  t.point["gamma_y"] = exact(l_c.y() / l_c.z());
  t.point["rho"] = exact(1.0 / l_c.z());
  t.point["g"] = exact(sim::gravity_world().norm());
  t.outputs = {l_c.x() / l_c.z(), l_c.y() / l_c.z(), g_b.squaredNorm()};
  return t;
}

Outcome criterion6() {
  Outcome o;
  const auto sys = models::vio_system();
  // d h / dt = L_f0 h + sum_i u_i L_fi h.
  std::vector<std::vector<Expr>> lie(sys.outputs.size());
  for (std::size_t k = 0; k < sys.outputs.size(); ++k) {
    for (std::size_t f = 0; f <= sys.inputs.size(); ++f) lie[k].push_back(lie_derivative(sys, sys.outputs[k].expr, {f}));
  }
  const sim::Extrinsics ext = sim::default_extrinsics();
  const Vector3d bg(0.004, -0.006, 0.002), ba(0.03, -0.02, 0.05);
  const sim::TrajectoryKind kinds[] = {sim::TrajectoryKind::kGeneral3D, sim::TrajectoryKind::kSlopeLemniscate,
                                       sim::TrajectoryKind::kCircleVaryingRate,
                                       sim::TrajectoryKind::kCylinderVaryingAccel};
  double worst = 0;
  int instants = 0;
  for (auto kind : kinds) {
    const sim::Trajectory traj(kind);
    for (int i = 0; i < kLieInstants; ++i) {
      const double t = 1.0 + 58.0 * i / (kLieInstants - 1);
      const auto s = traj(t);
      const Matrix3d R_WC = s.R * ext.R_BC;
      const Vector3d landmark = s.p + s.R * ext.p_BC + R_WC * Vector3d(0.6, -0.4, 5.0);
      const auto now = vio_truth(s, bg, ba, ext, landmark);
      const auto hi = vio_truth(traj(t + kFdStep), bg, ba, ext, landmark);
      const auto lo = vio_truth(traj(t - kFdStep), bg, ba, ext, landmark);
      Evaluator ev(now.point);
      double num = 0, den = 0;
      for (std::size_t k = 0; k < sys.outputs.size(); ++k) {
        Rational rate = ev(lie[k][0]);
        for (std::size_t f = 0; f < sys.inputs.size(); ++f) rate += now.point.at(sys.inputs[f]) * ev(lie[k][f + 1]);
        const double fd = (hi.outputs[k] - lo.outputs[k]) / (2 * kFdStep);
        num += std::pow(fd - rate.get_d(), 2);
        den += std::pow(rate.get_d(), 2);
      }
      const double rel = std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
      worst = std::max(worst, rel);
      ++instants;
      if (rel >= kLieRelTol) o.fail(std::string(to_string(kind)) + " t=" + std::to_string(t) + " rel " + std::to_string(rel));
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "%d instants on 4 trajectories, worst relative error %.2e", instants, worst);
  o.note(buf);
  return o;
}

// ---- 7 and 8 ----

struct Claim {
  std::string scenario;
  std::string description;
  std::function<bool(const sim::RunResult&)> holds;
};

bool label_is(const sim::RunResult& r, const std::string& var, sim::ConvergenceLabel label) {
  const auto* v = r.verdict(var);
  return v && v->label == label;
}

std::function<bool(const sim::RunResult&)> all_of(std::vector<std::string> vars, sim::ConvergenceLabel label) {
  return [vars, label](const sim::RunResult& r) {
    for (const auto& v : vars) {
      if (!label_is(r, v, label)) return false;
    }
    return true;
  };
}

Outcome check_claims(const std::vector<Claim>& claims) {
  Outcome o;
  std::map<std::string, std::vector<sim::RunResult>> runs;
  double slowest = 0;
  for (const auto& c : claims) {
    if (runs.count(c.scenario)) continue;
    auto& out = runs[c.scenario];
    for (int s = 0; s < kSimSeeds; ++s) {
      auto sc = sim::named_scenario(c.scenario);
      sc.seed = static_cast<std::uint64_t>(s);
      const auto t0 = std::chrono::steady_clock::now();
      out.push_back(sim::run_simulation(sc));
      const double dt = seconds_since(t0);
      slowest = std::max(slowest, dt);
      if (dt > kRunBudgetSec) o.fail(c.scenario + " seed " + std::to_string(s) + " took " + std::to_string(dt) + " s");
      if (out.back().diverged) o.fail(c.scenario + " seed " + std::to_string(s) + " diverged");
    }
  }
  std::string summary;
  for (const auto& c : claims) {
    int ok = 0;
    for (const auto& r : runs[c.scenario]) ok += !r.diverged && c.holds(r);
    summary += (summary.empty() ? "" : ", ") + c.scenario + " " + c.description + " " + std::to_string(ok) + "/" +
               std::to_string(kSimSeeds);
    if (ok < kSimRequired) o.fail(c.scenario + " " + c.description + " in " + std::to_string(ok) + "/5 seeds");
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "; slowest run %.1f s", slowest);
  o.note(summary + buf);
  return o;
}

Outcome criterion7() {
  using L = sim::ConvergenceLabel;
  return check_claims({
      {"slope_line", "ba NonConverged", all_of({"ba_x", "ba_y", "ba_z"}, L::kNonConverged)},
      {"slope_line", "p_bc NonConverged", all_of({"p_bc_x", "p_bc_y", "p_bc_z"}, L::kNonConverged)},
      {"slope_lemniscate", "p_bc_z NonConverged", all_of({"p_bc_z"}, L::kNonConverged)},
      {"slope_lemniscate", "p_bc_x,y Converged", all_of({"p_bc_x", "p_bc_y"}, L::kConverged)},
      {"slope_circle", "td NonConverged", all_of({"td"}, L::kNonConverged)},
  });
}

Outcome criterion8() {
  using L = sim::ConvergenceLabel;
  auto converged_close = [](const sim::RunResult& r) {
    const auto* v = r.verdict("td");
    return v && v->label == L::kConverged && std::abs(v->final_error) < kTdErrorTol;
  };
  return check_claims({
      {"case_a", "td NonConverged", all_of({"td"}, L::kNonConverged)},
      {"case_b", "td NonConverged", all_of({"td"}, L::kNonConverged)},
      {"case_c", "td Converged <5ms", converged_close},
      {"case_d", "td Converged <5ms", converged_close},
  });
}

// ---- 9 ----

Outcome criterion9() {
  Outcome o;
  for (auto kind : {models::VioConstraint::kPureTranslation, models::VioConstraint::kConstLocalAccel}) {
    const auto sys = vio_with(kind);
    AnalysisOptions par{5, 6, 123, kernels::Execution::kParallel};
    AnalysisOptions ser = par;
    ser.execution = kernels::Execution::kSerial;
    const io::ReportSettings st{5, 6, 123, "vio", models::to_string(kind)};
    const std::string a = io::dump_report(analyze(sys, par), st);
    if (a != io::dump_report(analyze(sys, par), st) || a != io::dump_report(analyze(sys, ser), st)) {
      o.fail(std::string("report differs for ") + models::to_string(kind));
    }
  }
  auto sc = sim::named_scenario("case_c");
  sc.duration = 15;
  const auto first = sim::run_batch(sc, 2, 77, kernels::Execution::kParallel);
  const auto second = sim::run_batch(sc, 2, 77, kernels::Execution::kSerial);
  for (std::size_t i = 0; i < first.size(); ++i) {
    if (first[i].csv() != second[i].csv()) o.fail("CSV differs for seed " + std::to_string(first[i].seed));
  }
  if (sim::summary_json(first) != sim::summary_json(second)) o.fail("summary differs");
  o.note("reports, CSVs and summaries byte-identical across repeats and serial/parallel execution");
  return o;
}

// ---- 10 ----

Outcome criterion10() {
  Outcome o;
  std::mt19937_64 rng(10);
  const std::pair<models::VioConstraint, int> fixtures[] = {{models::VioConstraint::kPureTranslation, 0},
                                                           {models::VioConstraint::kSingleAxisZ, 0},
                                                           {models::VioConstraint::kConstLocalAccel, 3}};
  for (const auto& [kind, state_delta] : fixtures) {
    const auto sys = vio_with(kind);
    for (const auto& f :
         fixtures::conversion_property_failures(sys, state_delta, -static_cast<int>(sys.constraints.size()), rng)) {
      o.fail(std::string(models::to_string(kind)) + ": " + f);
    }
  }
  int checked = 0, unsupported = 0;
  for (int t = 0; t < kRandomConversions; ++t) {
    const auto rc = fixtures::random_case(rng);
    try {
      for (const auto& f : fixtures::conversion_property_failures(rc.sys, rc.state_delta, rc.input_delta, rng)) {
        o.fail("random " + std::to_string(t) + ": " + f);
      }
      ++checked;
    } catch (const AffinityBrokenAfterSubstitution&) {
      ++unsupported;
    }
  }
  o.note("3 fixtures and " + std::to_string(checked) + " random systems clean (" + std::to_string(unsupported) +
         " rejected as non-affine after substitution)");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::function<Outcome()>> criteria = {criterion1, criterion2, criterion3, criterion4,
                                                          criterion5, criterion6, criterion7, criterion8,
                                                          criterion9, criterion10};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    std::printf("criterion %zu: %s  %s\n", i + 1, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
