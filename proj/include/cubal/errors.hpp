#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace cubal {

/// Base class for all errors thrown by this library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Mismatched or out-of-range dimensions, or an exhaustive-check size guard.
class DimensionError : public Error {
  public:
    using Error::Error;
};

/// Malformed input data: bad tables, bad config payloads, parse failures.
class ValidationError : public Error {
  public:
    using Error::Error;
};

/// Time argument outside a flow's domain (s < 0, s >= t, non-integer time
/// for a discrete family, finite-difference step violating the ordering).
class DomainError : public Error {
  public:
    using Error::Error;
};

/// An operation's verdict-based precondition does not hold for the rule
/// (e.g. the rule is not unital, not associative, or fails the sampled
/// power-associativity test).
class PreconditionError : public Error {
  public:
    using Error::Error;
};

/// A linear system A * X = I has no two-sided solution.
class NotInvertibleError : public Error {
  public:
    explicit NotInvertibleError(const std::string& msg,
                                std::optional<double> at_time = std::nullopt)
        : Error(msg), time(at_time) {}

    std::optional<double> time;
};

/// A scalar-family or permutation constraint fails at construction time.
/// Carries the constraint name and, where meaningful, the sampled time and
/// measured residual so callers can report exactly what broke.
class ConstraintViolation : public Error {
  public:
    ConstraintViolation(const std::string& msg, std::string which,
                        double at_time = 0.0, double res = 0.0)
        : Error(msg), constraint(std::move(which)), time(at_time), residual(res) {}

    std::string constraint;
    double time;
    double residual;
};

} // namespace cubal
