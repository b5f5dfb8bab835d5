#pragma once

#include <stdexcept>

namespace kerf {

// Input outside the mathematical domain of an operation (e.g. a coordinate outside [0,1]).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Caller misuse: empty training set, malformed configuration, bad shape.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An exhaustive computation would exceed its configured size limit.
class GuardError : public std::length_error {
 public:
  using std::length_error::length_error;
};

}  // namespace kerf
