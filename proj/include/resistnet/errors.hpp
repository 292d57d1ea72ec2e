#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace resistnet {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed edge-list input. `line()` is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A network invariant does not hold. `invariant()` names it, `witness()`
/// names the offending vertex or edge.
class ValidationError : public Error {
 public:
  ValidationError(std::string invariant, std::string witness)
      : Error("invariant '" + invariant + "' violated at " + witness),
        invariant_(std::move(invariant)),
        witness_(std::move(witness)) {}
  const std::string& invariant() const noexcept { return invariant_; }
  const std::string& witness() const noexcept { return witness_; }

 private:
  std::string invariant_;
  std::string witness_;
};

class SolverError : public Error {
 public:
  SolverError(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace resistnet
