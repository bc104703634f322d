#pragma once

#include <stdexcept>
#include <string>

namespace cohmark {

// Base class for all recoverable errors raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input text (transcripts, tables, pair files).
class ParseError : public Error {
public:
    using Error::Error;
};

// Bad configuration value or unknown identifier.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Data-level contract violation (duplicate visits, empty sets, dimension mismatch).
class DataError : public Error {
public:
    using Error::Error;
};

// A backend was asked for a mode it does not implement.
class CapabilityError : public Error {
public:
    using Error::Error;
};

// Non-finite loss, undefined denominator, zero-norm vector.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace cohmark
