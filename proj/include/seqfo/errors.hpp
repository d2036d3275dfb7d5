#pragma once

#include <stdexcept>
#include <string>

namespace seqfo {

/// Base class for all library errors. Everything thrown by seqfo derives
/// from this, so callers can catch one type at the boundary.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad dimensions, out-of-range values, malformed configuration.
class InvalidArgumentError : public Error {
public:
    explicit InvalidArgumentError(const std::string& what) : Error(what) {}
};

/// An iterative solve exhausted its iteration budget. Carries the last
/// residual so callers can decide whether "almost converged" is usable.
class NonConvergenceError : public Error {
public:
    NonConvergenceError(const std::string& what, double last_residual)
        : Error(what), last_residual_(last_residual) {}
    double last_residual() const noexcept { return last_residual_; }

private:
    double last_residual_;
};

/// A linear solve hit a (numerically) singular matrix. Carries the
/// condition-number estimate that triggered the rejection.
class SingularityError : public Error {
public:
    SingularityError(const std::string& what, double condition_estimate)
        : Error(what), condition_estimate_(condition_estimate) {}
    double condition_estimate() const noexcept { return condition_estimate_; }

private:
    double condition_estimate_;
};

/// Regularity constants violate the preconditions of the error analysis
/// (e.g. a contraction factor >= 1 or a non-positive curvature bound).
class AssumptionViolationError : public Error {
public:
    explicit AssumptionViolationError(const std::string& what) : Error(what) {}
};

/// A function evaluation produced NaN/inf where a finite value is required.
class NonFiniteError : public Error {
public:
    explicit NonFiniteError(const std::string& what) : Error(what) {}
};

}  // namespace seqfo
