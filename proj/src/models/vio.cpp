#include <array>

#include "noct/models.hpp"

namespace noct::models {

namespace {

using Vec3 = std::array<Expr, 3>;

Vec3 vars3(const std::string& stem) {
  return {Expr::variable(stem + "_x"), Expr::variable(stem + "_y"), Expr::variable(stem + "_z")};
}

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

Vec3 add(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Vec3 neg(const Vec3& a) { return {-a[0], -a[1], -a[2]}; }
Vec3 scale(const Expr& s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }

Vec3 unit(int i) {
  Vec3 e{Expr(0), Expr(0), Expr(0)};
  e[static_cast<std::size_t>(i)] = Expr(1);
  return e;
}

Vec3 mat_vec(const std::vector<Expr>& m, const Vec3& v) {
  Vec3 out;
  for (std::size_t r = 0; r < 3; ++r) out[r] = make_add({m[3 * r] * v[0], m[3 * r + 1] * v[1], m[3 * r + 2] * v[2]});
  return out;
}

const std::array<const char*, 3> kAxes{"x", "y", "z"};

}  // namespace

std::vector<Expr> rotation_from_trimmed_quaternion(const Expr& qx, const Expr& qy, const Expr& qz) {
  const Expr qw(1);
  const Expr n = make_add({Expr(1), pow(qx, 2), pow(qy, 2), pow(qz, 2)});
  const std::vector<Expr> num{
      pow(qw, 2) + pow(qx, 2) - pow(qy, 2) - pow(qz, 2), 2 * (qx * qy - qw * qz), 2 * (qx * qz + qw * qy),
      2 * (qx * qy + qw * qz), pow(qw, 2) - pow(qx, 2) + pow(qy, 2) - pow(qz, 2), 2 * (qy * qz - qw * qx),
      2 * (qx * qz - qw * qy), 2 * (qy * qz + qw * qx), pow(qw, 2) - pow(qx, 2) - pow(qy, 2) + pow(qz, 2)};
  std::vector<Expr> r;
  for (const auto& e : num) r.push_back(make_div(e, n));
  return r;
}

AffineControlSystem vio_system() {
  AffineControlSystem sys;
  for (const char* stem : {"v", "g", "bg", "ba", "p", "q"}) {
    for (const char* axis : kAxes) sys.state.push_back(std::string(stem) + "_" + axis);
  }
  sys.state.insert(sys.state.end(), {"gamma_x", "gamma_y", "rho"});
  for (const char* stem : {"w", "a"}) {
    for (const char* axis : kAxes) sys.inputs.push_back(std::string(stem) + "_" + axis);
  }
  sys.constants = {"g"};

  const Vec3 v = vars3("v"), g = vars3("g"), bg = vars3("bg"), ba = vars3("ba"), p = vars3("p"), q = vars3("q");
  const Expr gx = Expr::variable("gamma_x"), gy = Expr::variable("gamma_y"), rho = Expr::variable("rho");
  const auto R = rotation_from_trimmed_quaternion(q[0], q[1], q[2]);
  const Vec3 lever = add(scale(rho, p), neg(Vec3{gx, gy, Expr(1)}));  // rho p - gamma_bar

  // C_{gamma rho} applied to a camera-frame vector.
  auto landmark_rate = [&](const Vec3& w) -> std::array<Expr, 3> {
    return {w[0] - gx * w[2], w[1] - gy * w[2], -rho * w[2]};
  };
  auto assemble = [&](const Vec3& dv, const Vec3& dg, const std::array<Expr, 3>& dl) {
    std::vector<Expr> f(dv.begin(), dv.end());
    f.insert(f.end(), dg.begin(), dg.end());
    for (int k = 0; k < 12; ++k) f.emplace_back(0);  // b_g, b_a, p_CB, q_CB are constant
    f.insert(f.end(), dl.begin(), dl.end());
    return f;
  };

  // Drift: every term with w = -b_g and a = -b_a.
  const Vec3 w0 = neg(bg);
  sys.drift = assemble(add(add(cross(v, w0), neg(ba)), g), cross(g, w0),
                       landmark_rate(add(cross(mat_vec(R, w0), lever), neg(scale(rho, mat_vec(R, v))))));

  const Vec3 zero{Expr(0), Expr(0), Expr(0)};
  for (int i = 0; i < 3; ++i) {
    const Vec3 e = unit(i);
    sys.fields.push_back(assemble(cross(v, e), cross(g, e), landmark_rate(cross(mat_vec(R, e), lever))));
  }
  for (int i = 0; i < 3; ++i) sys.fields.push_back(assemble(unit(i), zero, {Expr(0), Expr(0), Expr(0)}));

  sys.outputs = {{"gamma_x", gx}, {"gamma_y", gy}, {"g_norm", make_add({g[0] * g[0], g[1] * g[1], g[2] * g[2]})}};
  return sys;
}

const char* to_string(VioConstraint kind) {
  switch (kind) {
    case VioConstraint::kConstLocalAccel:
      return "const_local_accel";
    case VioConstraint::kSingleAxisZ:
      return "single_axis_z";
    case VioConstraint::kPureTranslation:
      return "pure_translation";
  }
  return "?";
}

VioConstraint vio_constraint_from_string(std::string_view name) {
  for (auto k : {VioConstraint::kConstLocalAccel, VioConstraint::kSingleAxisZ, VioConstraint::kPureTranslation}) {
    if (name == to_string(k)) return k;
  }
  throw ModelError("unknown constraint preset '" + std::string(name) + "'");
}

std::vector<Constraint> vio_constraints(VioConstraint kind) {
  std::vector<Constraint> out;
  auto gyro = [&](int i) {
    const std::string axis = kAxes[static_cast<std::size_t>(i)];
    Constraint c;
    c.kind = ConstraintKind::kZeroAffine;
    c.c0 = -Expr::variable("bg_" + axis);
    c.input_terms = {{"w_" + axis, Expr(1)}};
    c.solve_for = "w_" + axis;
    return c;
  };
  switch (kind) {
    case VioConstraint::kConstLocalAccel:
      for (int i = 0; i < 3; ++i) {
        const std::string axis = kAxes[static_cast<std::size_t>(i)];
        Constraint c;
        c.kind = ConstraintKind::kConstAffine;
        c.c0 = Expr::variable("g_" + axis) - Expr::variable("ba_" + axis);
        c.input_terms = {{"a_" + axis, Expr(1)}};
        c.solve_for = "a_" + axis;
        c.param = "d_" + axis;
        out.push_back(std::move(c));
      }
      break;
    case VioConstraint::kSingleAxisZ:
      for (int i = 0; i < 2; ++i) out.push_back(gyro(i));
      break;
    case VioConstraint::kPureTranslation:
      for (int i = 0; i < 3; ++i) out.push_back(gyro(i));
      break;
  }
  return out;
}

namespace {

std::vector<Expr> zeros(std::size_t n) { return std::vector<Expr>(n, Expr(0)); }

std::vector<std::string> names3(const std::string& stem) {
  return {stem + "_x", stem + "_y", stem + "_z"};
}

}  // namespace

std::vector<Expr> published_const_accel_vector() {
  std::vector<Expr> n;
  for (const auto& s : {"v", "g"}) {
    for (auto& e : vars3(s)) n.push_back(e);
  }
  for (int k = 0; k < 3; ++k) n.emplace_back(0);
  for (auto& e : vars3("d")) n.push_back(-e);
  for (auto& e : vars3("p")) n.push_back(e);
  for (int k = 0; k < 5; ++k) n.emplace_back(0);
  n.push_back(-Expr::variable("rho"));
  return n;
}

std::vector<ExpectedResult> vio_expected_results() {
  std::vector<ExpectedResult> out;

  out.push_back({"general", std::nullopt, 21, 21, 0, {}, {}});

  {
    // Scale: v, p and d grow with the scene, rho shrinks, b_a absorbs the
    // change in a_t so the measured acceleration stays fixed. The g block is
    // zero because the gravity-norm output pins it.
    ExpectedResult r{"const_local_accel", VioConstraint::kConstLocalAccel, 24, 23, 1, {}, {}};
    for (const auto& s : {"v", "ba", "p"}) {
      for (auto& n : names3(s)) r.indeterminable.push_back(n);
    }
    r.indeterminable.push_back("rho");
    for (auto& n : names3("d")) r.indeterminable.push_back(n);
    std::vector<Expr> n;
    for (auto& e : vars3("v")) n.push_back(e);
    for (int k = 0; k < 6; ++k) n.emplace_back(0);
    for (auto& e : vars3("d")) n.push_back(-e);
    for (auto& e : vars3("p")) n.push_back(e);
    for (int k = 0; k < 5; ++k) n.emplace_back(0);
    n.push_back(-Expr::variable("rho"));
    for (auto& e : vars3("d")) n.push_back(e);
    r.null_vectors.push_back(std::move(n));
    out.push_back(std::move(r));
  }

  {
    ExpectedResult r{"single_axis_z", VioConstraint::kSingleAxisZ, 21, 20, 1, names3("p"), {}};
    const Expr qx = Expr::variable("q_x"), qy = Expr::variable("q_y"), qz = Expr::variable("q_z");
    auto n = zeros(21);
    n[12] = 2 * (qy + qx * qz);
    n[13] = -2 * (qx - qy * qz);
    n[14] = -(pow(qx, 2) + pow(qy, 2) - pow(qz, 2) - 1);
    r.null_vectors.push_back(std::move(n));
    out.push_back(std::move(r));
  }

  {
    ExpectedResult r{"pure_translation", VioConstraint::kPureTranslation, 21, 16, 5, {}, {}};
    for (const auto& s : {"g", "ba", "p"}) {
      for (auto& n : names3(s)) r.indeterminable.push_back(n);
    }
    for (std::size_t i = 0; i < 3; ++i) {
      auto n = zeros(21);
      n[12 + i] = Expr(1);
      r.null_vectors.push_back(std::move(n));
    }
    const Vec3 g = vars3("g");
    for (std::size_t k = 1; k < 3; ++k) {
      // Tilt about the body axis orthogonal to g_x and g_k.
      auto n = zeros(21);
      for (std::size_t base : {std::size_t{3}, std::size_t{9}}) {
        n[base] = -g[k];
        n[base + k] = g[0];
      }
      r.null_vectors.push_back(std::move(n));
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace noct::models
