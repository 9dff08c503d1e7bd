#pragma once

#include <stdexcept>
#include <string>

namespace specbias {

/// Raised when a caller violates a precondition (bad dimensions, invalid
/// configuration, out-of-range parameter). The CLI maps it to exit code 1.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a computation cannot produce a finite result. The CLI maps it
/// to exit code 2.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dense-matrix work refused because it would exceed the memory budget.
class BudgetExceeded : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

inline void require(bool condition, const std::string& message)
{
    if (!condition) {
        throw InvalidArgument(message);
    }
}

} // namespace specbias
