#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hpsbl {

// Base of every library error. Callers that only care about "numerical
// failure vs. bad input" can catch the two intermediate classes.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InputError : public Error {
public:
  using Error::Error;
};

class NumericalError : public Error {
public:
  using Error::Error;
};

class ParseError : public InputError {
public:
  ParseError(const std::string &what, std::size_t offset)
      : InputError(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

private:
  std::size_t offset_;
};

class UnknownIdentifierError : public InputError {
public:
  UnknownIdentifierError(const std::string &name, std::size_t offset)
      : InputError("unknown identifier '" + name + "' at offset " + std::to_string(offset)),
        name_(name) {}
  const std::string &identifier() const noexcept { return name_; }

private:
  std::string name_;
};

// Evaluation left the domain of a function (log of nonpositive, sqrt of
// negative, division by zero). subexpression() is the printed offending node.
class DomainError : public NumericalError {
public:
  DomainError(const std::string &what, std::string subexpr)
      : NumericalError(what + " in '" + subexpr + "'"), subexpr_(std::move(subexpr)) {}
  const std::string &subexpression() const noexcept { return subexpr_; }

private:
  std::string subexpr_;
};

class NotPositiveDefiniteError : public NumericalError {
public:
  explicit NotPositiveDefiniteError(std::ptrdiff_t pivot)
      : NumericalError("matrix is not positive definite (pivot " + std::to_string(pivot) + ")"),
        pivot_(pivot) {}
  std::ptrdiff_t pivot() const noexcept { return pivot_; }

private:
  std::ptrdiff_t pivot_;
};

class ConvergenceError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

// Operation requires the layer-resolving (split) mesh regime.
class RegimeError : public InputError {
public:
  using InputError::InputError;
};

class GeometryError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class ConfigError : public InputError {
public:
  ConfigError(const std::string &field, const std::string &what)
      : InputError("config field '" + field + "': " + what), field_(field) {}
  const std::string &field() const noexcept { return field_; }

private:
  std::string field_;
};

} // namespace hpsbl
