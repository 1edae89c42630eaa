#pragma once

#include <stdexcept>
#include <string>

namespace onestep {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad inputs: malformed files, shape mismatches, invalid configuration.
/// The CLI maps these to exit code 2.
class ValidationError : public Error {
public:
    using Error::Error;
};

class ConfigError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class DataError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ShapeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// File parse failures; messages carry the offending file and line.
class ParseError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Failures arising during computation. The CLI maps these to exit code 3.
class ComputeError : public Error {
public:
    using Error::Error;
};

class NumericError : public ComputeError {
public:
    using ComputeError::ComputeError;
};

/// Propensity outside the configured bounds (and clipping not enabled).
class PositivityError : public ComputeError {
public:
    using ComputeError::ComputeError;
};

class ConvergenceError : public ComputeError {
public:
    using ComputeError::ComputeError;
};

class RngDegenerateError : public ComputeError {
public:
    using ComputeError::ComputeError;
};

}  // namespace onestep
