#include <random>

#include "node.hpp"
#include "noct/expr.hpp"

namespace noct {

Evaluator::Evaluator(const Point& point) {
  storage_.reserve(point.size());
  for (const auto& [name, value] : point) {
    const VarId id = intern_variable(name);
    if (values_.size() <= id) values_.resize(id + 1, nullptr);
    storage_.push_back(value);
  }
  // storage_ no longer reallocates; take stable addresses now.
  std::size_t i = 0;
  for (const auto& [name, value] : point) values_[intern_variable(name)] = &storage_[i++];
}

Rational Evaluator::operator()(const Expr& e) {
  if (e.kind() == Expr::Kind::kConstant) return e.value();
  roots_.push_back(e);
  return eval(e.node());
}

const Rational& Evaluator::eval(const detail::Node* n) {
  switch (n->kind) {
    case Expr::Kind::kConstant:
      return n->value;
    case Expr::Kind::kVariable: {
      if (n->var >= values_.size() || values_[n->var] == nullptr) {
        throw MissingVariable(variable_name(n->var));
      }
      return *values_[n->var];
    }
    default:
      break;
  }
  if (auto it = memo_.find(n); it != memo_.end()) return it->second;

  Rational r;
  const auto& kids = n->children;
  switch (n->kind) {
    case Expr::Kind::kAdd:
      r = eval(kids[0].node());
      for (std::size_t i = 1; i < kids.size(); ++i) r += eval(kids[i].node());
      break;
    case Expr::Kind::kMul:
      r = eval(kids[0].node());
      for (std::size_t i = 1; i < kids.size() && sgn(r) != 0; ++i) r *= eval(kids[i].node());
      break;
    case Expr::Kind::kNeg:
      r = -eval(kids[0].node());
      break;
    case Expr::Kind::kDiv: {
      const Rational& den = eval(kids[1].node());
      if (sgn(den) == 0) throw DivisionByZero();
      r = eval(kids[0].node()) / den;
      break;
    }
    case Expr::Kind::kPow: {
      const Rational& b = eval(kids[0].node());
      const auto k = static_cast<unsigned long>(n->exponent);
      mpz_pow_ui(r.get_num_mpz_t(), b.get_num_mpz_t(), k);
      mpz_pow_ui(r.get_den_mpz_t(), b.get_den_mpz_t(), k);
      break;
    }
    default:
      break;
  }
  return memo_.emplace(n, std::move(r)).first->second;
}

Rational evaluate(const Expr& e, const Point& p) { return Evaluator(p)(e); }

bool equals_random(const Expr& a, const Expr& b, int trials, std::uint64_t seed) {
  if (trials < 1) throw Error("equals_random needs at least one trial");
  const Expr diff = a - b;
  if (diff.is_constant()) return diff.is_zero();

  const auto vars = diff.free_variables().names();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<long> coord(-kSampleRange, kSampleRange);
  for (int t = 0; t < trials; ++t) {
    int poles = 0;
    while (true) {
      Point p;
      for (const auto& v : vars) p.emplace(v, Rational(coord(rng)));
      try {
        if (sgn(evaluate(diff, p)) != 0) return false;
        break;
      } catch (const DivisionByZero&) {
        if (++poles >= kMaxResamples) throw ResampleExhausted(poles);
      }
    }
  }
  return true;
}

}  // namespace noct
