#pragma once

#include <stdexcept>
#include <string>

namespace qlbm {

/// Malformed or non-finite input to a numerical kernel.
class InvalidInput : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// A site density that is zero or negative where ρ must be positive.
class DegenerateDensity : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

/// Inconsistent configuration (bad lattice size, incompatible mode/model, ...).
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Negative populations or an invalid state handed to the amplitude encoder.
class EncodingError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

/// Numerical breakdown: NaN in a trajectory, NaN loss, singular operator.
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Trajectory blew up at a given step.
class InstabilityError : public NumericalError {
  public:
    InstabilityError(const std::string& what, int step)
        : NumericalError(what + " (step " + std::to_string(step) + ")"), step_(step) {}
    int step() const noexcept { return step_; }

  private:
    int step_;
};

} // namespace qlbm
