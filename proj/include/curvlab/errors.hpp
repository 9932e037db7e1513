#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace curvlab {

/// Base of every error the library raises on purpose. Anything else escaping
/// the library is an internal failure.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class SyntaxError : public Error {
public:
    SyntaxError(std::size_t offset, std::vector<std::string> expected, const std::string& detail);

    std::size_t offset() const noexcept { return offset_; }
    const std::vector<std::string>& expected() const noexcept { return expected_; }

private:
    std::size_t offset_;
    std::vector<std::string> expected_;
};

/// Failure while evaluating a function of r. The radius is attached by the
/// caller that knows it (usually the quadrature loop).
class EvalError : public Error {
public:
    explicit EvalError(const std::string& what) : Error(what), message_(what) {}

    void set_location(double r);
    bool has_location() const noexcept { return has_location_; }
    double location() const noexcept { return location_; }
    const char* what() const noexcept override { return message_.c_str(); }

private:
    std::string message_;
    double location_ = 0.0;
    bool has_location_ = false;
};

class DomainError : public EvalError {
public:
    using EvalError::EvalError;
};

class OverflowError : public EvalError {
public:
    using EvalError::EvalError;
};

/// Coordinate singularity at the pole r = 0.
class PoleError : public EvalError {
public:
    using EvalError::EvalError;
};

class NonPositiveWarp : public EvalError {
public:
    using EvalError::EvalError;
};

class InvalidDimension : public Error {
public:
    using Error::Error;
};

class InvalidWarp : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class DeltaOutOfRange : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class ParseError : public ConfigError {
public:
    ParseError(int line, const std::string& detail);
    int line() const noexcept { return line_; }

private:
    int line_;
};

class ValidationError : public ConfigError {
public:
    ValidationError(std::string key, const std::string& detail);
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

} // namespace curvlab
