#pragma once

#include <stdexcept>
#include <string>

namespace calib {

/// Base class for every error raised by the library.
class CalibError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public CalibError {
public:
    using CalibError::CalibError;
};

/// Evaluation requested at (or too close to) a point where a field or gradient is undefined.
class SingularPoint : public CalibError {
public:
    using CalibError::CalibError;
};

/// Inconsistent problem instance (e.g. boundary point not at distance R from the center).
class InvalidSpec : public CalibError {
public:
    using CalibError::CalibError;
};

class QuadratureFailure : public CalibError {
public:
    using CalibError::CalibError;
};

class StiffnessFailure : public CalibError {
public:
    using CalibError::CalibError;
};

/// Construction requested in a dimension it is not defined for (odd k).
class UnsupportedDimension : public CalibError {
public:
    using CalibError::CalibError;
};

/// The profile h takes negative values, so the divergence bound cannot be composed.
class SignViolation : public CalibError {
public:
    using CalibError::CalibError;
};

}  // namespace calib
