#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace simba {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes do not fit the operation.
class DimensionError : public Error {
   public:
    using Error::Error;
};

/// A linear solve hit a pivot below the singularity threshold.
class SingularMatrixError : public Error {
   public:
    using Error::Error;
};

/// Caller broke a documented precondition (e.g. backward on a non-scalar).
class ContractError : public Error {
   public:
    using Error::Error;
};

/// Entries overflowed to a non-finite value while building a matrix.
class OverflowError : public Error {
   public:
    using Error::Error;
};

/// The eigenvalue iteration did not converge; carries the best estimate so far.
class ConvergenceError : public Error {
   public:
    ConvergenceError(const std::string& what, double partial) : Error(what), partial_(partial) {}
    double partial_result() const noexcept { return partial_; }

   private:
    double partial_;
};

/// A simulated trajectory left the finite range.
class DivergenceError : public Error {
   public:
    DivergenceError(const std::string& what, std::size_t step) : Error(what), step_(step) {}
    std::size_t step() const noexcept { return step_; }

   private:
    std::size_t step_;
};

/// Malformed input file; line is 1-based, 0 when not tied to a line.
class ParseError : public Error {
   public:
    ParseError(const std::string& what, std::size_t line) : Error(what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

   private:
    std::size_t line_;
};

/// Inconsistent configuration, bad data statistics or mismatched model files.
class ConfigError : public Error {
   public:
    using Error::Error;
};

}  // namespace simba
