#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace synlik {

/// Bad arguments: dimension mismatches, negative counts, invalid hyperparameters.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed text input. `location()` is a 1-based line/row number or a byte
/// offset, depending on the format being read.
class ParseError : public InputError {
 public:
  ParseError(const std::string& what, std::size_t location)
      : InputError(what), location_(location) {}
  std::size_t location() const noexcept { return location_; }

 private:
  std::size_t location_;
};

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by the ODE integrator when the step size underflows or the state
/// stops being finite.
class StiffnessError : public std::runtime_error {
 public:
  StiffnessError(const std::string& what, double time)
      : std::runtime_error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

class NotPositiveDefiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace synlik
