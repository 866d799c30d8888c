#include <sstream>

#include "noct/expr.hpp"

namespace noct {
namespace {

using Kind = Expr::Kind;

// Where a subexpression sits decides whether it needs parentheses.
enum class Slot { kTerm, kFactor, kPowBase, kDenominator, kNegOperand };

void print(std::ostream& os, const Expr& e, Slot slot);

void print_paren(std::ostream& os, const Expr& e) {
  os << '(';
  print(os, e, Slot::kTerm);
  os << ')';
}

void print_constant(std::ostream& os, const Rational& v, Slot slot) {
  const bool negative = sgn(v) < 0;
  const bool fraction = v.get_den() != 1;
  const bool wrap = (slot == Slot::kPowBase || slot == Slot::kDenominator || slot == Slot::kNegOperand)
                        ? (negative || fraction)
                        : false;
  if (wrap) os << '(';
  os << rational_to_string(v);
  if (wrap) os << ')';
}

void print_mul(std::ostream& os, const Expr& e) {
  bool first = true;
  for (const auto& f : e.children()) {
    if (!first) os << '*';
    if (f.is_constant()) {
      print_constant(os, f.value(), first ? Slot::kFactor : Slot::kPowBase);
    } else if (f.kind() == Kind::kAdd || f.kind() == Kind::kDiv) {
      print_paren(os, f);
    } else {
      print(os, f, Slot::kFactor);
    }
    first = false;
  }
}

void print(std::ostream& os, const Expr& e, Slot slot) {
  switch (e.kind()) {
    case Kind::kConstant:
      print_constant(os, e.value(), slot);
      return;
    case Kind::kVariable:
      os << e.name();
      return;
    case Kind::kAdd: {
      if (slot != Slot::kTerm) return print_paren(os, e);
      bool first = true;
      for (const auto& t : e.children()) {
        if (first) {
          print(os, t, Slot::kTerm);
          first = false;
          continue;
        }
        if (t.kind() == Kind::kNeg) {
          os << " - ";
          print(os, t.children()[0], Slot::kNegOperand);
        } else if (t.is_constant() && sgn(t.value()) < 0) {
          os << " - " << rational_to_string(-t.value());
        } else if (t.kind() == Kind::kMul && t.children()[0].is_constant() &&
                   sgn(t.children()[0].value()) < 0) {
          os << " - ";
          print(os, make_neg(t), Slot::kNegOperand);
        } else {
          os << " + ";
          print(os, t, Slot::kTerm);
        }
      }
      return;
    }
    case Kind::kMul:
      if (slot == Slot::kPowBase || slot == Slot::kDenominator) return print_paren(os, e);
      print_mul(os, e);
      return;
    case Kind::kNeg: {
      if (slot == Slot::kPowBase || slot == Slot::kDenominator || slot == Slot::kNegOperand) {
        return print_paren(os, e);
      }
      const Expr& inner = e.children()[0];
      os << '-';
      if (inner.kind() == Kind::kAdd || inner.kind() == Kind::kDiv) {
        print_paren(os, inner);
      } else {
        print(os, inner, Slot::kNegOperand);
      }
      return;
    }
    case Kind::kDiv: {
      if (slot == Slot::kPowBase || slot == Slot::kDenominator) return print_paren(os, e);
      const Expr& num = e.children()[0];
      const Expr& den = e.children()[1];
      if (num.kind() == Kind::kAdd) {
        print_paren(os, num);
      } else {
        print(os, num, Slot::kFactor);
      }
      os << '/';
      print(os, den, Slot::kDenominator);
      return;
    }
    case Kind::kPow:
      print(os, e.children()[0], Slot::kPowBase);
      os << '^' << e.exponent();
      return;
  }
}

}  // namespace

std::string to_string(const Expr& e) {
  std::ostringstream os;
  print(os, e, Slot::kTerm);
  return os.str();
}

}  // namespace noct
