#pragma once

#include <stdexcept>
#include <string>

namespace recbf {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidOrder : Error {
  using Error::Error;
};

// Pole placement given non-real or non-negative poles.
struct AssumptionViolation : Error {
  using Error::Error;
};

struct InvalidBox : Error {
  using Error::Error;
};

// Robust bound below the actuator floor. Carries both so the caller can
// log the event and fall back to the floor.
struct InfeasibleConstraint : Error {
  InfeasibleConstraint(double floor_, double bound_)
      : Error("robust bound " + std::to_string(bound_) +
              " below actuator floor " + std::to_string(floor_)),
        floor(floor_), bound(bound_) {}
  double floor;
  double bound;
};

struct DegenerateParameter : Error {
  using Error::Error;
};

// Safe-distance denominator not a deceleration.
struct UndefinedStop : Error {
  using Error::Error;
};

struct UnidentifiableParameter : Error {
  using Error::Error;
};

struct SimulationAbort : Error {
  SimulationAbort(const std::string& what, double t_)
      : Error(what + " at t=" + std::to_string(t_)), t(t_) {}
  double t;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace recbf
