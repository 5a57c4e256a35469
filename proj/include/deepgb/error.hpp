#pragma once

#include <stdexcept>
#include <string>

namespace deepgb {

/// Base class for all library errors. Maps to exit code 1 in the CLI.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad configuration, unknown keys, missing files, invalid usage.
/// Maps to exit code 2 in the CLI.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// Malformed input data (bad numeric cell, bad date, empty series).
class ParseError : public Error {
public:
    explicit ParseError(const std::string& msg) : Error(msg) {}
};

/// Timestamps not strictly increasing with constant spacing.
class SpacingError : public Error {
public:
    explicit SpacingError(const std::string& msg) : Error(msg) {}
};

/// Series too short for the requested train/test protocol.
class SplitError : public Error {
public:
    explicit SplitError(const std::string& msg) : Error(msg) {}
};

/// Dimension or cardinality mismatch between model and data.
class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& msg) : Error(msg) {}
};

/// Training failure (divergent loss, empty dataset).
class TrainError : public Error {
public:
    explicit TrainError(const std::string& msg) : Error(msg) {}
};

/// Invalid metric input (length mismatch, empty report).
class MetricError : public Error {
public:
    explicit MetricError(const std::string& msg) : Error(msg) {}
};

/// Unreadable or corrupt model/data file on disk.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

} // namespace deepgb
