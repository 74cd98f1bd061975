#pragma once

#include <stdexcept>
#include <string>

namespace flock {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A cloud's load reached or exceeded its capacity; processing delay is undefined there.
struct OverloadedCloud : Error {
  OverloadedCloud(int cloud, double load, double capacity)
      : Error("cloud " + std::to_string(cloud) + " overloaded: load " + std::to_string(load) +
              " >= capacity " + std::to_string(capacity)),
        cloud(cloud), load(load), capacity(capacity) {}
  int cloud;
  double load;
  double capacity;
};

// Regularization evaluated at a negative weight.
struct NegativeWeight : Error {
  explicit NegativeWeight(double w) : Error("negative weight " + std::to_string(w)), weight(w) {}
  double weight;
};

// Bound parameters violate lambda > 1 - epsilon (the condition is unsatisfiable otherwise).
struct InvalidBound : Error {
  using Error::Error;
};

// Weight bracket with w_min > w_max or non-positive endpoints.
struct DegenerateBracket : Error {
  using Error::Error;
};

// Exhaustive enumeration would exceed the configured node budget.
struct BudgetExceeded : Error {
  using Error::Error;
};

// No assignment satisfies every cloud's strict capacity constraint.
struct NoFeasibleAssignment : Error {
  using Error::Error;
};

// Statistic requested on a sample too small to support it.
struct InsufficientSamples : Error {
  using Error::Error;
};

}  // namespace flock
