#pragma once

#include <stdexcept>
#include <string>

namespace ewpf {

// Shape disagreement between tensors (both shapes are named in the message).
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Invalid hyperparameter or option value (e.g. dropout p outside [0,1)).
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A precondition of an operation was violated by the caller.
struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};

// Malformed or unusable input data (CSV parsing, file IO).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Training produced a non-finite loss.
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace ewpf
