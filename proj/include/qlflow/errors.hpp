#pragma once

#include <stdexcept>
#include <string>

namespace qlflow {

/// A function or intermediate quantity evaluated to a non-finite number.
class EvaluationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An operation was called outside its documented domain of validity.
class PreconditionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Bad or inconsistent experiment configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A field violates the homogeneous Dirichlet condition.
class BoundaryViolation : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Every non-critical node vanished; gradient-weighted integrals are undefined.
class DegenerateFieldError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace qlflow
