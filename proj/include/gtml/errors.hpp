#pragma once

#include <stdexcept>
#include <string>

namespace gtml {

/// Bad label, index, or shape handed to an operation.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent configuration file.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A bound formula evaluated outside its stated admissible range.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Iterative solver stopped before reaching its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Chain is reducible or periodic, so no unique stationary law exists.
class NotErgodicError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace gtml
