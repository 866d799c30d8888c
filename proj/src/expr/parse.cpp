#include <cctype>

#include "noct/expr.hpp"

namespace noct {

SyntaxError::SyntaxError(std::size_t offset, std::set<std::string> expected, const std::string& found)
    : Error([&] {
        std::string msg = "syntax error at byte " + std::to_string(offset) + ": expected ";
        bool first = true;
        for (const auto& e : expected) {
          msg += (first ? "" : " or ") + e;
          first = false;
        }
        return msg + ", found " + found;
      }()),
      offset_(offset),
      expected_(std::move(expected)) {}

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  Expr parse_all() {
    Expr e = expr();
    skip_ws();
    if (pos_ != s_.size()) fail({"operator", "end of input"});
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  [[noreturn]] void fail(std::set<std::string> expected) {
    std::string found = pos_ < s_.size() ? "'" + std::string(1, s_[pos_]) + "'" : "end of input";
    throw SyntaxError(pos_, std::move(expected), found);
  }

  Expr expr() {
    std::vector<Expr> terms{term()};
    for (char c = peek(); c == '+' || c == '-'; c = peek()) {
      ++pos_;
      Expr t = term();
      terms.push_back(c == '+' ? t : make_neg(t));
    }
    return make_add(std::move(terms));
  }

  Expr term() {
    Expr acc = factor();
    for (char c = peek(); c == '*' || c == '/'; c = peek()) {
      ++pos_;
      Expr f = factor();
      acc = c == '*' ? make_mul({acc, f}) : make_div(acc, f);
    }
    return acc;
  }

  Expr factor() {
    if (peek() == '-') {
      ++pos_;
      return make_neg(factor());
    }
    Expr base = atom();
    if (peek() == '^') {
      ++pos_;
      return pow(base, exponent());
    }
    return base;
  }

  long exponent() {
    const std::size_t start = (skip_ws(), pos_);
    if (peek() == '(') {
      ++pos_;
      Expr inner = expr();
      if (peek() != ')') fail({"')'"});
      ++pos_;
      if (!inner.is_constant() || inner.value().get_den() != 1 || !inner.value().get_num().fits_slong_p()) {
        throw IntegerExponentError(start);
      }
      return inner.value().get_num().get_si();
    }
    bool negative = false;
    if (peek() == '-') {
      negative = true;
      ++pos_;
      skip_ws();
    }
    if (pos_ >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
      if (pos_ < s_.size() && (s_[pos_] == '.' || std::isalpha(static_cast<unsigned char>(s_[pos_])))) {
        throw IntegerExponentError(start);
      }
      fail({"integer exponent"});
    }
    const std::size_t digits = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (pos_ < s_.size() && (s_[pos_] == '.')) throw IntegerExponentError(start);
    const std::string text(s_.substr(digits, pos_ - digits));
    mpz_class v(text, 10);
    if (!v.fits_slong_p()) throw IntegerExponentError(start);
    return negative ? -v.get_si() : v.get_si();
  }

  Expr atom() {
    const char c = peek();
    if (c == '(') {
      ++pos_;
      Expr e = expr();
      if (peek() != ')') fail({"')'", "operator"});
      ++pos_;
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (pos_ < s_.size() && s_[pos_] == '.') fail({"integer", "'/'"});
      return Expr(Rational(mpz_class(std::string(s_.substr(start, pos_ - start)), 10)));
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
        ++pos_;
      }
      return Expr::variable(s_.substr(start, pos_ - start));
    }
    fail({"'('", "'-'", "identifier", "integer"});
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse(std::string_view text) { return Parser(text).parse_all(); }

}  // namespace noct
