#pragma once

#include <stdexcept>
#include <string>

namespace fmdp {

/// Malformed structure, scope, table or out-of-range index.
class structural_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A flattened model would exceed the configured memory guard.
class capacity_error : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// An iterative solver hit its iteration cap.
class convergence_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A target state cannot be reached from some start state.
class unreachable_error : public convergence_error {
 public:
  using convergence_error::convergence_error;
};

/// Input violates a documented precondition (parameter range, model shape).
class precondition_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace fmdp
