#pragma once

#include <stdexcept>
#include <string>

namespace rhsim {

// Bad argument outside an operation's mathematical domain.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Numerical routine failed (non-convergence, singular system, non-finite data).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inconsistent or unparseable run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unknown preset or table entry.
class LookupError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Random stream asked for more points than it holds.
class StreamExhausted : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

}  // namespace rhsim
