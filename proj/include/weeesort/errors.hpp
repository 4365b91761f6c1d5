#pragma once

#include <stdexcept>
#include <string>

namespace weeesort {

/// Base class for all weeesort failures. Subclasses select the CLI exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad configuration: unknown backbone, invalid preset combination, bad policy ranges.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A function was called with arguments that violate its contract.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// A file could not be parsed at the syntax level.
class ParseError : public Error {
public:
    using Error::Error;
};

/// A file parsed but its content violates the schema or an invariant.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Degenerate or inconsistent geometry (zero-area polygons and the like).
class GeometryError : public Error {
public:
    using Error::Error;
};

/// Filesystem or image decoding failure.
class IoError : public Error {
public:
    using Error::Error;
};

/// Data disagrees with its own metadata (for example recorded vs actual image size).
class ConsistencyError : public Error {
public:
    using Error::Error;
};

/// A metric was requested on an empty domain (empty matrix, all-undefined macro).
class UndefinedMetricError : public Error {
public:
    using Error::Error;
};

/// Pretrained weights were requested but are not available locally.
class PretrainedWeightsError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// Training aborted; carries the epoch where the failure happened (-1 if unknown).
class TrainingError : public Error {
public:
    explicit TrainingError(const std::string& message, int epoch = -1)
        : Error(message), epoch(epoch) {}
    int epoch;
};

}  // namespace weeesort
