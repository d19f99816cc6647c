#pragma once

#include <stdexcept>
#include <string>

namespace scoresmooth {

/// Input outside the mathematical domain of an operation (t <= 0, NaN, wrong dimension).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Parameter combination outside the validity window (delta >= half spacing, bad eps, ...).
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A computation produced a non-finite value.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace scoresmooth
