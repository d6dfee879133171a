#pragma once

#include <stdexcept>
#include <string>

namespace skeltop {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parameter outside its documented domain (tau, epsilon, k_d, ...).
class InvalidParameter : public Error {
public:
    using Error::Error;
};

/// Two inputs that must share a shape do not.
class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// Malformed file content. `where()` names the offending field or line.
class ParseError : public Error {
public:
    ParseError(std::string where, const std::string& message)
        : Error(where + ": " + message), where_(std::move(where)) {}

    const std::string& where() const noexcept { return where_; }

private:
    std::string where_;
};

/// File could not be opened, read or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// A metric whose definition needs non-empty inputs was given empty ones.
class UndefinedMetric : public Error {
public:
    using Error::Error;
};

class EmptyGraph : public Error {
public:
    using Error::Error;
};

class GenerationError : public Error {
public:
    using Error::Error;
};

}  // namespace skeltop
