#pragma once

#include <stdexcept>
#include <string>

namespace rlt {

/// Argument outside the domain where the closed form is defined.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Root iteration did not meet tolerance within the iteration budget.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Literal (unstabilised) form would overflow double precision.
class OverflowError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

/// Invalid simulation or experiment configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Plain Monte-Carlo relative standard error too large to be meaningful.
class VarianceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownFunctional : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace rlt
