#pragma once

#include <stdexcept>
#include <string>

namespace iqt {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed file header or magic.
class FormatError : public Error {
public:
    using Error::Error;
};

/// File payload inconsistent with its header (truncation, length mismatch).
class CorruptionError : public Error {
public:
    using Error::Error;
};

/// Shapes, patch geometry or bounds that do not fit together.
class GeometryError : public Error {
public:
    using Error::Error;
};

/// Invalid numeric parameter (non-SPD covariance, lambda <= 0, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Rejection sampler exhausted its attempt budget.
class SamplingError : public Error {
public:
    using Error::Error;
};

/// Metric undefined for the given input (e.g. max(x) == 0 for NRMSE).
class MetricError : public Error {
public:
    using Error::Error;
};

/// Configuration file or command-line value rejected.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Missing or unreadable input data.
class DataError : public Error {
public:
    using Error::Error;
};

} // namespace iqt
