#pragma once
#include <stdexcept>
#include <string>

namespace floq {

// Violated precondition / refused input (CLI maps this to exit code 2).
struct PreconditionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical failure: tolerance not met, solver did not converge (exit code 1).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace floq
