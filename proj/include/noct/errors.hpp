#pragma once

#include <set>
#include <stdexcept>
#include <string>

namespace noct {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// ---- expression engine ----

class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t offset, std::set<std::string> expected, const std::string& found);

  std::size_t offset() const { return offset_; }
  const std::set<std::string>& expected() const { return expected_; }

 private:
  std::size_t offset_;
  std::set<std::string> expected_;
};

class IntegerExponentError : public Error {
 public:
  explicit IntegerExponentError(std::size_t offset)
      : Error("exponent at byte " + std::to_string(offset) + " is not an integer"), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// A denominator vanished. During random sampling this means the point hit a
/// pole and the caller should draw another one.
class DivisionByZero : public Error {
 public:
  DivisionByZero() : Error("division by zero") {}
};

class MissingVariable : public Error {
 public:
  explicit MissingVariable(const std::string& name)
      : Error("no value for variable '" + name + "'"), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

class ResampleExhausted : public Error {
 public:
  explicit ResampleExhausted(int attempts)
      : Error("hit a pole on " + std::to_string(attempts) + " consecutive random points") {}
};

// ---- linear algebra ----

class IndexOutOfRange : public Error {
 public:
  using Error::Error;
};

// ---- system conversion ----

class ModelError : public Error {
 public:
  using Error::Error;
};

class NotAffineInVariable : public ModelError {
 public:
  explicit NotAffineInVariable(const std::string& var)
      : ModelError("constraint is not affine in '" + var + "'"), var_(var) {}
  const std::string& variable() const { return var_; }

 private:
  std::string var_;
};

class NotAffineInInput : public ModelError {
 public:
  explicit NotAffineInInput(const std::string& detail) : ModelError(detail) {}
};

class CoefficientGenericallyZero : public ModelError {
 public:
  explicit CoefficientGenericallyZero(const std::string& var)
      : ModelError("coefficient of '" + var + "' in the constraint is generically zero"),
        var_(var) {}
  const std::string& variable() const { return var_; }

 private:
  std::string var_;
};

class NoSolvableVariable : public ModelError {
 public:
  NoSolvableVariable() : ModelError("no variable of the constraint can be solved for") {}
};

class SolveForIsD : public ModelError {
 public:
  SolveForIsD()
      : ModelError("a constant-valued constraint may not solve for its own unknown constant") {}
};

class AffinityBrokenAfterSubstitution : public ModelError {
 public:
  explicit AffinityBrokenAfterSubstitution(const std::string& detail)
      : ModelError("substitution broke the control-affine form: " + detail) {}
};

// ---- observability ----

class DimensionMismatch : public ModelError {
 public:
  using ModelError::ModelError;
};

class PoleAtAllSamples : public Error {
 public:
  PoleAtAllSamples() : Error("could not find a sample point free of poles") {}
};

}  // namespace noct
