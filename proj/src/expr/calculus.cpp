#include <unordered_map>

#include "node.hpp"
#include "noct/expr.hpp"

namespace noct {

std::size_t Differentiator::KeyHash::operator()(const Key& k) const noexcept {
  return std::hash<const void*>{}(k.node) ^ (static_cast<std::size_t>(k.var) * 0x9e3779b97f4a7c15ULL);
}

Expr Differentiator::operator()(const Expr& e, VarId v) {
  if (!e.depends_on(v)) return Expr(0);
  if (e.kind() == Expr::Kind::kVariable) return Expr(1);

  const Key key{e.node(), v};
  if (auto it = memo_.find(key); it != memo_.end()) return it->second.result;

  Expr result;
  const auto kids = e.children();
  switch (e.kind()) {
    case Expr::Kind::kAdd: {
      std::vector<Expr> terms;
      for (const auto& c : kids) {
        if (c.depends_on(v)) terms.push_back((*this)(c, v));
      }
      result = make_add(std::move(terms));
      break;
    }
    case Expr::Kind::kMul: {
      std::vector<Expr> terms;
      for (std::size_t i = 0; i < kids.size(); ++i) {
        if (!kids[i].depends_on(v)) continue;
        std::vector<Expr> f(kids.begin(), kids.end());
        f[i] = (*this)(kids[i], v);
        terms.push_back(make_mul(std::move(f)));
      }
      result = make_add(std::move(terms));
      break;
    }
    case Expr::Kind::kNeg:
      result = make_neg((*this)(kids[0], v));
      break;
    case Expr::Kind::kDiv: {
      const Expr& num = kids[0];
      const Expr& den = kids[1];
      Expr dnum = (*this)(num, v);
      if (!den.depends_on(v)) {
        result = make_div(dnum, den);
        break;
      }
      // d(p/b^k) = p'/b^k - k p b' / b^(k+1): keeps the denominator's degree
      // growing linearly under repeated differentiation.
      const Expr base = den.kind() == Expr::Kind::kPow ? den.children()[0] : den;
      const long k = den.kind() == Expr::Kind::kPow ? den.exponent() : 1;
      Expr dbase = (*this)(base, v);
      Expr second = make_div(make_mul({Expr(k), num, dbase}), pow(base, k + 1));
      result = make_add({make_div(dnum, den), make_neg(second)});
      break;
    }
    case Expr::Kind::kPow: {
      const Expr& base = kids[0];
      const long k = e.exponent();
      result = make_mul({Expr(k), pow(base, k - 1), (*this)(base, v)});
      break;
    }
    default:
      break;
  }
  memo_.emplace(key, Entry{e, result});
  return result;
}

std::vector<Expr> Differentiator::gradient(const Expr& e, std::span<const VarId> vars) {
  std::vector<Expr> g;
  g.reserve(vars.size());
  for (VarId v : vars) g.push_back((*this)(e, v));
  return g;
}

Expr differentiate(const Expr& e, std::string_view var) {
  Differentiator d;
  return d(e, var);
}

namespace {

class Substituter {
 public:
  explicit Substituter(const std::map<std::string, Expr>& bindings) {
    for (const auto& [name, value] : bindings) {
      const VarId id = intern_variable(name);
      target_ids_.push_back(id);
      values_.emplace(id, value);
    }
  }

  Expr operator()(const Expr& e) {
    if (!touches(e)) return e;
    if (e.kind() == Expr::Kind::kVariable) return values_.at(e.var());
    if (auto it = memo_.find(e.node()); it != memo_.end()) return it->second.second;

    std::vector<Expr> kids;
    kids.reserve(e.children().size());
    for (const auto& c : e.children()) kids.push_back((*this)(c));
    Expr out;
    switch (e.kind()) {
      case Expr::Kind::kAdd:
        out = make_add(std::move(kids));
        break;
      case Expr::Kind::kMul:
        out = make_mul(std::move(kids));
        break;
      case Expr::Kind::kNeg:
        out = make_neg(kids[0]);
        break;
      case Expr::Kind::kDiv:
        out = make_div(kids[0], kids[1]);
        break;
      case Expr::Kind::kPow:
        out = pow(kids[0], e.exponent());
        break;
      default:
        out = e;
    }
    memo_.emplace(e.node(), std::make_pair(e, out));
    return out;
  }

 private:
  bool touches(const Expr& e) const {
    for (VarId id : target_ids_) {
      if (e.depends_on(id)) return true;
    }
    return false;
  }

  std::vector<VarId> target_ids_;
  std::unordered_map<VarId, Expr> values_;
  std::unordered_map<const detail::Node*, std::pair<Expr, Expr>> memo_;
};

}  // namespace

Expr substitute(const Expr& e, const std::map<std::string, Expr>& bindings) {
  if (bindings.empty()) return e;
  return Substituter(bindings)(e);
}

}  // namespace noct
