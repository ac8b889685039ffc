#pragma once

#include <stdexcept>
#include <string>

namespace mixedflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad argument: unsupported dimension, degree overflow, index out of range.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Height function with R + rho <= 0 somewhere, or a non-finite intermediate.
class GeometryError : public Error {
public:
    using Error::Error;
};

/// Speed function not admissible (non-positive umbilic derivative) or not
/// evaluable at a node (negative base under a fractional power).
class SpeedError : public Error {
public:
    using Error::Error;
};

/// Integral of E_{k+1} over the surface is not positive.
class ConstraintDegenerate : public Error {
public:
    using Error::Error;
};

/// A time step could not be completed. Carries a suggested retry step.
class StepRejected : public Error {
public:
    StepRejected(const std::string& what, double suggested_dt)
        : Error(what), suggested_dt_(suggested_dt) {}
    double suggested_dt() const noexcept { return suggested_dt_; }

private:
    double suggested_dt_;
};

/// Iterative procedure did not converge.
class NotConverged : public Error {
public:
    using Error::Error;
};

/// Malformed config or snapshot text; the message carries the line number.
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

} // namespace mixedflow
