#pragma once

// Exact symbolic expressions over multivariate rational functions.
//
// Nodes are immutable and hash-consed: structurally identical subtrees built
// anywhere in the process share one node. This keeps iterated derivatives
// compact and lets per-node memo tables (differentiation, evaluation) hit
// across unrelated expressions.

#include <cstdint>
#include <map>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <gmpxx.h>

#include "noct/errors.hpp"

namespace noct {

using Rational = mpq_class;
using VarId = std::uint32_t;

/// Returns the dense id of a variable name, registering it on first use.
VarId intern_variable(std::string_view name);
const std::string& variable_name(VarId id);

/// Set of variable ids stored as a bitset.
class VarSet {
 public:
  void insert(VarId id);
  bool contains(VarId id) const;
  bool empty() const;
  void merge(const VarSet& other);
  std::vector<VarId> ids() const;
  /// Names in registration order of their ids.
  std::vector<std::string> names() const;

 private:
  std::vector<std::uint64_t> words_;
};

namespace detail {
struct Node;
}

class Expr {
 public:
  enum class Kind : std::uint8_t { kConstant, kVariable, kAdd, kMul, kNeg, kDiv, kPow };

  /// The zero constant.
  Expr();
  Expr(int value);  // NOLINT(google-explicit-constructor)
  Expr(long value);  // NOLINT(google-explicit-constructor)
  explicit Expr(const Rational& value);

  static Expr variable(std::string_view name);
  static Expr variable(VarId id);

  Kind kind() const;
  bool is_constant() const { return kind() == Kind::kConstant; }
  bool is_zero() const;
  bool is_one() const;

  /// Payload accessors; only meaningful for the matching kind.
  const Rational& value() const;
  VarId var() const;
  const std::string& name() const;
  long exponent() const;
  std::span<const Expr> children() const;

  const VarSet& free_variables() const;
  bool depends_on(VarId id) const;

  /// Identity of the shared node; equal ids mean structurally equal trees.
  const detail::Node* node() const { return node_.get(); }
  bool same_as(const Expr& other) const { return node_ == other.node_; }

  std::string to_string() const;

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);

 private:
  explicit Expr(std::shared_ptr<const detail::Node> node) : node_(std::move(node)) {}
  friend struct detail::Node;
  friend class ExprBuilder;

  std::shared_ptr<const detail::Node> node_;
};

std::ostream& operator<<(std::ostream& os, const Expr& e);

/// Smart constructors applying local simplification only: flattening of
/// nested sums/products, constant folding, 0/1 absorption, and rewriting of
/// negative exponents as division.
Expr make_add(std::vector<Expr> terms);
Expr make_mul(std::vector<Expr> factors);
Expr make_neg(const Expr& e);
Expr make_div(const Expr& num, const Expr& den);
Expr pow(const Expr& base, long exponent);

/// Sum of a[i]*b[i].
Expr dot(std::span<const Expr> a, std::span<const Expr> b);

// ---- parsing and printing ----

/// Parses the expression grammar
///   expr := term (('+'|'-') term)* ; term := factor (('*'|'/') factor)*
///   factor := '-' factor | atom ('^' integer)? ; atom := integer | identifier | '(' expr ')'
/// A rational literal `p/q` is the division of two integer atoms and folds to
/// the same constant.
Expr parse(std::string_view text);

/// Prints in the grammar accepted by parse().
std::string to_string(const Expr& e);

// ---- calculus ----

/// Partial derivative by structural rules. Memoises per node so repeated
/// calls sharing subtrees stay linear in the DAG size.
class Differentiator {
 public:
  Expr operator()(const Expr& e, VarId v);
  Expr operator()(const Expr& e, std::string_view v) { return (*this)(e, intern_variable(v)); }
  std::vector<Expr> gradient(const Expr& e, std::span<const VarId> vars);

 private:
  struct Key {
    const detail::Node* node;
    VarId var;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept;
  };
  struct Entry {
    Expr source;  // keeps the key node alive
    Expr result;
  };
  std::unordered_map<Key, Entry, KeyHash> memo_;
};

Expr differentiate(const Expr& e, std::string_view var);

/// Simultaneous substitution; right-hand sides are not re-substituted.
Expr substitute(const Expr& e, const std::map<std::string, Expr>& bindings);

// ---- evaluation ----

using Point = std::map<std::string, Rational>;

/// Evaluates expressions at one point with a memo table shared across calls,
/// so evaluating many rows built from common subtrees costs one DAG pass.
/// Not thread-safe; use one evaluator per thread.
class Evaluator {
 public:
  explicit Evaluator(const Point& point);
  Evaluator(Evaluator&&) = default;
  Evaluator& operator=(Evaluator&&) = default;
  Evaluator(const Evaluator&) = delete;
  Evaluator& operator=(const Evaluator&) = delete;

  Rational operator()(const Expr& e);

 private:
  const Rational& eval(const detail::Node* n);

  std::vector<const Rational*> values_;
  std::vector<Rational> storage_;
  std::vector<Expr> roots_;  // memo keys stay valid while their roots live
  std::unordered_map<const detail::Node*, Rational> memo_;
};

Rational evaluate(const Expr& e, const Point& p);

/// Default number of random points per identity decision.
inline constexpr int kDefaultTrials = 5;
/// Random coordinates are drawn from integers in [-kSampleRange, kSampleRange].
inline constexpr long kSampleRange = 1'000'000;
/// Consecutive pole hits tolerated before giving up.
inline constexpr int kMaxResamples = 100;

/// Probabilistic identity test: true iff a - b vanishes at `trials`
/// independent random integer points. Never reports false for equal inputs.
bool equals_random(const Expr& a, const Expr& b, int trials = kDefaultTrials,
                   std::uint64_t seed = 0);

/// Formats a rational as "p" or "p/q".
std::string rational_to_string(const Rational& r);
Rational rational_from_string(std::string_view s);

}  // namespace noct
