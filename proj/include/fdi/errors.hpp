// errors.hpp — exception types shared across the library

#pragma once

#include <stdexcept>

namespace fdi {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bath construction broke the positive-definiteness bound.
struct PositivityViolation : Error { using Error::Error; };

// Eigensolver did not converge.
struct NumericalFailure : Error { using Error::Error; };

// An eigenvalue of the potential matrix came out non-positive even though the
// model validated; signals a validation/arithmetic inconsistency.
struct NonPositiveMode : Error { using Error::Error; };

// Adaptive integrator could not meet its local tolerance.
struct StepFailure : Error { using Error::Error; };

// An energy-function variant returned a negative value.
struct NegativeEnergy : Error { using Error::Error; };

struct UnphysicalInitialState : Error { using Error::Error; };

// Operations that divide by R(t) refuse to run when R^2(t) <= 0.
struct NonPositiveR2 : Error { using Error::Error; };

// A guarded operation was called outside its stated assumptions; the message
// names the violated assumption.
struct PreconditionFailure : Error { using Error::Error; };

struct ConfigError : Error { using Error::Error; };

} // namespace fdi
