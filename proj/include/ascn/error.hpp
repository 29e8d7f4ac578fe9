#pragma once

#include <stdexcept>
#include <string>

namespace ascn {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input file. `line` is 1-based; 0 means "whole file" (e.g. empty).
struct ParseError : Error {
    ParseError(const std::string& msg, std::size_t line_no)
        : Error(msg + " (line " + std::to_string(line_no) + ")"), line(line_no) {}
    std::size_t line;
};

struct IoError : Error {
    using Error::Error;
};

struct InvalidParam : Error {
    using Error::Error;
};

// Cloud too small / empty for the requested operation.
struct DegenerateCloud : Error {
    using Error::Error;
};

struct DimensionMismatch : Error {
    using Error::Error;
};

struct NumericalError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

// Model file carries an unsupported format version.
struct VersionError : Error {
    using Error::Error;
};

// Model file fails structural or checksum validation.
struct CorruptModel : Error {
    using Error::Error;
};

}  // namespace ascn
