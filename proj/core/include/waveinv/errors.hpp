#pragma once

#include <stdexcept>
#include <string>

namespace waveinv {

// Each error category maps onto one CLI exit code (see tools/main.cpp).

class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when the data carry no usable signal, e.g. a reconstruction with
/// vanishing norm inside the parameter iteration.
class DegenerateDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InsufficientDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A mathematical property that must hold by construction was violated.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace waveinv
