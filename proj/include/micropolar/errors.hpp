#pragma once

#include <stdexcept>
#include <string>

namespace micropolar {

// Sizes, grids or configuration values that do not fit together.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Scalar passed where a vector field is required, or the reverse.
struct TypeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input violates a documented precondition (e.g. non-solenoidal velocity).
struct PreconditionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Corrupt or incompatible checkpoint.
struct IntegrityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace micropolar
