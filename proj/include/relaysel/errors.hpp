#pragma once

#include <stdexcept>
#include <string>

namespace relaysel {

// Invalid argument outside an operation's domain (x <= 0 for log_gamma, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A configurable resource cap was exceeded (composition count, ...).
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Series non-convergence, failed factorization, quadrature error bound exceeded.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Valid-looking parameters the closed forms do not cover (non-integer m, ...).
class UnsupportedParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace relaysel
