#include "noct/expr.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <functional>
#include <mutex>
#include <sstream>
#include <unordered_map>

#include "node.hpp"

namespace noct {

// ---------------------------------------------------------------------------
// Variable registry

namespace {

struct Registry {
  std::mutex mu;
  std::unordered_map<std::string, VarId> ids;
  std::deque<std::string> names;  // stable references
};

Registry& registry() {
  static Registry r;
  return r;
}

}  // namespace

VarId intern_variable(std::string_view name) {
  auto& r = registry();
  std::lock_guard lock(r.mu);
  auto it = r.ids.find(std::string(name));
  if (it != r.ids.end()) return it->second;
  const auto id = static_cast<VarId>(r.names.size());
  r.names.emplace_back(name);
  r.ids.emplace(std::string(name), id);
  return id;
}

const std::string& variable_name(VarId id) {
  auto& r = registry();
  std::lock_guard lock(r.mu);
  return r.names.at(id);
}

// ---------------------------------------------------------------------------
// VarSet

void VarSet::insert(VarId id) {
  const std::size_t w = id / 64;
  if (words_.size() <= w) words_.resize(w + 1, 0);
  words_[w] |= std::uint64_t{1} << (id % 64);
}

bool VarSet::contains(VarId id) const {
  const std::size_t w = id / 64;
  return w < words_.size() && ((words_[w] >> (id % 64)) & 1U);
}

bool VarSet::empty() const {
  return std::all_of(words_.begin(), words_.end(), [](auto w) { return w == 0; });
}

void VarSet::merge(const VarSet& other) {
  if (words_.size() < other.words_.size()) words_.resize(other.words_.size(), 0);
  for (std::size_t i = 0; i < other.words_.size(); ++i) words_[i] |= other.words_[i];
}

std::vector<VarId> VarSet::ids() const {
  std::vector<VarId> out;
  for (std::size_t w = 0; w < words_.size(); ++w) {
    for (std::uint64_t bits = words_[w]; bits != 0; bits &= bits - 1) {
      out.push_back(static_cast<VarId>(w * 64 + static_cast<unsigned>(__builtin_ctzll(bits))));
    }
  }
  return out;
}

std::vector<std::string> VarSet::names() const {
  std::vector<std::string> out;
  for (VarId id : ids()) out.push_back(variable_name(id));
  return out;
}

// ---------------------------------------------------------------------------
// Interning

class ExprBuilder {
 public:
  static Expr wrap(std::shared_ptr<const detail::Node> n) { return Expr(std::move(n)); }
};

namespace detail {
namespace {

std::size_t hash_mix(std::size_t seed, std::size_t v) {
  return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

std::size_t hash_rational(const Rational& r) {
  std::size_t h = mpz_get_ui(r.get_num_mpz_t());
  h = hash_mix(h, static_cast<std::size_t>(mpz_sgn(r.get_num_mpz_t())));
  h = hash_mix(h, mpz_size(r.get_num_mpz_t()));
  h = hash_mix(h, mpz_get_ui(r.get_den_mpz_t()));
  return hash_mix(h, mpz_size(r.get_den_mpz_t()));
}

bool same_payload(const Node& n, Expr::Kind kind, const Rational& value, VarId var, long exponent,
                  const std::vector<Expr>& children) {
  if (n.kind != kind || n.var != var || n.exponent != exponent) return false;
  if (kind == Expr::Kind::kConstant && n.value != value) return false;
  if (n.children.size() != children.size()) return false;
  for (std::size_t i = 0; i < children.size(); ++i) {
    if (!n.children[i].same_as(children[i])) return false;
  }
  return true;
}

struct InternTable {
  std::mutex mu;
  std::unordered_map<std::size_t, std::vector<std::weak_ptr<const Node>>> buckets;
  std::size_t entries = 0;
  std::size_t sweep_at = 1 << 16;

  void sweep() {
    entries = 0;
    for (auto it = buckets.begin(); it != buckets.end();) {
      auto& v = it->second;
      std::erase_if(v, [](const auto& w) { return w.expired(); });
      entries += v.size();
      it = v.empty() ? buckets.erase(it) : std::next(it);
    }
    sweep_at = std::max<std::size_t>(1 << 16, 2 * entries);
  }
};

InternTable& table() {
  static auto* t = new InternTable;  // outlives static Exprs destroyed at exit
  return *t;
}

}  // namespace

Expr intern(Expr::Kind kind, Rational value, VarId var, long exponent, std::vector<Expr> children) {
  std::size_t h = hash_mix(static_cast<std::size_t>(kind), var);
  h = hash_mix(h, static_cast<std::size_t>(exponent));
  if (kind == Expr::Kind::kConstant) h = hash_mix(h, hash_rational(value));
  for (const auto& c : children) h = hash_mix(h, std::hash<const void*>{}(c.node()));

  auto& t = table();
  std::lock_guard lock(t.mu);
  auto& bucket = t.buckets[h];
  for (auto it = bucket.begin(); it != bucket.end();) {
    if (auto sp = it->lock()) {
      if (same_payload(*sp, kind, value, var, exponent, children)) return ExprBuilder::wrap(sp);
      ++it;
    } else {
      it = bucket.erase(it);
      --t.entries;
    }
  }
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->value = std::move(value);
  n->var = var;
  n->exponent = exponent;
  if (kind == Expr::Kind::kVariable) n->free.insert(var);
  for (const auto& c : children) n->free.merge(c.free_variables());
  n->children = std::move(children);
  n->hash = h;
  bucket.push_back(n);
  if (++t.entries > t.sweep_at) t.sweep();
  return ExprBuilder::wrap(std::move(n));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Expr

namespace {

Expr constant(Rational v) {
  v.canonicalize();
  return detail::intern(Expr::Kind::kConstant, std::move(v), 0, 0, {});
}

const Expr& zero() {
  static const Expr z = constant(0);
  return z;
}

}  // namespace

Expr::Expr() : Expr(zero()) {}
Expr::Expr(int value) : Expr(constant(Rational(value))) {}
Expr::Expr(long value) : Expr(constant(Rational(value))) {}
Expr::Expr(const Rational& value) : Expr(constant(value)) {}

Expr Expr::variable(std::string_view name) { return variable(intern_variable(name)); }
Expr Expr::variable(VarId id) { return detail::intern(Kind::kVariable, Rational(0), id, 0, {}); }

Expr::Kind Expr::kind() const { return node_->kind; }
bool Expr::is_zero() const { return node_->kind == Kind::kConstant && sgn(node_->value) == 0; }
bool Expr::is_one() const { return node_->kind == Kind::kConstant && node_->value == 1; }
const Rational& Expr::value() const { return node_->value; }
VarId Expr::var() const { return node_->var; }
const std::string& Expr::name() const { return variable_name(node_->var); }
long Expr::exponent() const { return node_->exponent; }
std::span<const Expr> Expr::children() const { return node_->children; }
const VarSet& Expr::free_variables() const { return node_->free; }
bool Expr::depends_on(VarId id) const { return node_->free.contains(id); }
std::string Expr::to_string() const { return noct::to_string(*this); }

std::ostream& operator<<(std::ostream& os, const Expr& e) { return os << to_string(e); }

// ---------------------------------------------------------------------------
// Smart constructors

Expr make_add(std::vector<Expr> terms) {
  std::vector<Expr> flat;
  flat.reserve(terms.size());
  Rational c = 0;
  std::function<void(const Expr&)> push = [&](const Expr& t) {
    switch (t.kind()) {
      case Expr::Kind::kConstant:
        c += t.value();
        break;
      case Expr::Kind::kAdd:
        for (const auto& s : t.children()) push(s);
        break;
      default:
        flat.push_back(t);
    }
  };
  for (const auto& t : terms) push(t);
  if (flat.empty()) return Expr(c);
  if (sgn(c) != 0) flat.push_back(Expr(c));
  if (flat.size() == 1) return flat.front();
  return detail::intern(Expr::Kind::kAdd, Rational(0), 0, 0, std::move(flat));
}

Expr make_mul(std::vector<Expr> factors) {
  std::vector<Expr> flat;
  flat.reserve(factors.size() + 1);
  Rational c = 1;
  std::function<void(const Expr&)> push = [&](const Expr& f) {
    switch (f.kind()) {
      case Expr::Kind::kConstant:
        c *= f.value();
        break;
      case Expr::Kind::kMul:
        for (const auto& s : f.children()) push(s);
        break;
      case Expr::Kind::kNeg:
        c = -c;
        push(f.children()[0]);
        break;
      default:
        flat.push_back(f);
    }
  };
  for (const auto& f : factors) {
    push(f);
    if (sgn(c) == 0) return Expr(0);
  }
  if (flat.empty()) return Expr(c);
  if (c == -1) {
    Expr rest = flat.size() == 1 ? flat.front()
                                 : detail::intern(Expr::Kind::kMul, Rational(0), 0, 0, std::move(flat));
    return detail::intern(Expr::Kind::kNeg, Rational(0), 0, 0, {rest});
  }
  if (c != 1) flat.insert(flat.begin(), Expr(c));
  if (flat.size() == 1) return flat.front();
  return detail::intern(Expr::Kind::kMul, Rational(0), 0, 0, std::move(flat));
}

Expr make_neg(const Expr& e) {
  switch (e.kind()) {
    case Expr::Kind::kConstant:
      return Expr(Rational(-e.value()));
    case Expr::Kind::kNeg:
      return e.children()[0];
    case Expr::Kind::kMul:
      if (e.children()[0].is_constant()) {
        std::vector<Expr> f(e.children().begin(), e.children().end());
        f[0] = Expr(Rational(-f[0].value()));
        return make_mul(std::move(f));
      }
      [[fallthrough]];
    default:
      return detail::intern(Expr::Kind::kNeg, Rational(0), 0, 0, {e});
  }
}

Expr make_div(const Expr& num, const Expr& den) {
  if (den.is_constant()) {
    if (sgn(den.value()) == 0) throw DivisionByZero();
    if (den.is_one()) return num;
    return make_mul({Expr(Rational(1 / den.value())), num});
  }
  if (num.is_zero()) return num;
  if (den.kind() == Expr::Kind::kNeg) return make_div(make_neg(num), den.children()[0]);
  if (num.kind() == Expr::Kind::kDiv) {
    return make_div(num.children()[0], make_mul({num.children()[1], den}));
  }
  if (den.kind() == Expr::Kind::kDiv) {
    return make_div(make_mul({num, den.children()[1]}), den.children()[0]);
  }
  return detail::intern(Expr::Kind::kDiv, Rational(0), 0, 0, {num, den});
}

Expr pow(const Expr& base, long exponent) {
  if (exponent == 0) return Expr(1);
  if (exponent == 1) return base;
  if (exponent < 0) return make_div(Expr(1), pow(base, -exponent));
  switch (base.kind()) {
    case Expr::Kind::kConstant: {
      Rational r;
      mpz_pow_ui(r.get_num_mpz_t(), base.value().get_num_mpz_t(), static_cast<unsigned long>(exponent));
      mpz_pow_ui(r.get_den_mpz_t(), base.value().get_den_mpz_t(), static_cast<unsigned long>(exponent));
      return Expr(r);
    }
    case Expr::Kind::kPow:
      return pow(base.children()[0], base.exponent() * exponent);
    case Expr::Kind::kNeg: {
      Expr p = pow(base.children()[0], exponent);
      return exponent % 2 == 0 ? p : make_neg(p);
    }
    case Expr::Kind::kDiv:
      return make_div(pow(base.children()[0], exponent), pow(base.children()[1], exponent));
    default:
      return detail::intern(Expr::Kind::kPow, Rational(0), 0, exponent, {base});
  }
}

Expr operator+(const Expr& a, const Expr& b) { return make_add({a, b}); }
Expr operator-(const Expr& a, const Expr& b) { return make_add({a, make_neg(b)}); }
Expr operator*(const Expr& a, const Expr& b) { return make_mul({a, b}); }
Expr operator/(const Expr& a, const Expr& b) { return make_div(a, b); }
Expr operator-(const Expr& a) { return make_neg(a); }

Expr dot(std::span<const Expr> a, std::span<const Expr> b) {
  assert(a.size() == b.size());
  std::vector<Expr> terms;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].is_zero() || b[i].is_zero()) continue;
    terms.push_back(make_mul({a[i], b[i]}));
  }
  return make_add(std::move(terms));
}

std::string rational_to_string(const Rational& r) { return r.get_str(10); }

Rational rational_from_string(std::string_view s) {
  Rational r;
  if (r.set_str(std::string(s), 10) != 0 || sgn(r.get_den()) == 0) {
    throw Error("malformed rational '" + std::string(s) + "'");
  }
  r.canonicalize();
  return r;
}

}  // namespace noct
