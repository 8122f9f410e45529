#pragma once

#include <stdexcept>
#include <string>

namespace ssmreduce {

enum class ErrorKind { input = 1, precondition = 2, numerical = 3 };

/// Base error; kind() maps onto the CLI exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Malformed or invalid input data.
class InputError : public Error {
public:
    explicit InputError(const std::string& what) : Error(ErrorKind::input, what) {}
};

/// Mathematical precondition failure (resonance, singular solve).
class PreconditionError : public Error {
public:
    explicit PreconditionError(const std::string& what) : Error(ErrorKind::precondition, what) {}
};

/// Numerical non-convergence (step underflow, escaped orbit, Newton failure).
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

}  // namespace ssmreduce
