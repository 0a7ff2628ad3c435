#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "uaa/types.hpp"

namespace uaa {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An argument outside the mathematical domain of an operation (negative
// regularization weight, non-positive step, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// A requested capability is not provided by an oracle, or a configuration
// value is invalid.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Structurally valid tokens that violate the format (non-increasing indices).
class FormatError : public ParseError {
 public:
  using ParseError::ParseError;
};

class EmptyDatasetError : public Error {
 public:
  EmptyDatasetError() : Error("dataset is empty") {}
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// The finite-difference step could not be coupled to the trial step length
// within the iteration budget. Carries the last pair tried.
class CouplingFailure : public Error {
 public:
  CouplingFailure(double h, Vector step)
      : Error("inexact Hessian step coupling did not converge"), h_(h), step_(std::move(step)) {}
  double h() const { return h_; }
  const Vector& step() const { return step_; }

 private:
  double h_;
  Vector step_;
};

class EscalationFailure : public Error {
 public:
  EscalationFailure(int escalations, double tau)
      : Error("auxiliary tau escalation exceeded its cap"), escalations_(escalations), tau_(tau) {}
  int escalations() const { return escalations_; }
  double tau() const { return tau_; }

 private:
  int escalations_;
  double tau_;
};

// Trace file whose header does not match the documented column set.
class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace uaa
