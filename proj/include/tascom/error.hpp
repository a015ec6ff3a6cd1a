#pragma once

#include <stdexcept>
#include <string>

namespace tascom {

// Bad input data: unreadable files, inconsistent ids, non-finite values.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller broke an operation's precondition (shape mismatch, overlapping subsets, ...).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Numerical failure during a run, e.g. a non-finite training loss.
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tascom
