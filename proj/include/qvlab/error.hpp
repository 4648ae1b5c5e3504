#pragma once

#include <stdexcept>
#include <string>

namespace qvlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (s <= 0, dt <= 0, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A requested time or window is not covered by the data.
class RangeError : public Error {
public:
    using Error::Error;
};

/// A model parameter violates its admissible set (|a| >= 1, illegal beta, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Missing context or inconsistent inputs supplied by the caller.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Not enough usable data to carry out an estimation.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

/// Malformed input file. Carries the 1-based line number of the offending row.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Option price outside the open no-arbitrage band, so no implied vol exists.
class OutOfBandError : public Error {
public:
    enum class Bound { Lower, Upper };

    OutOfBandError(const std::string& what, Bound bound) : Error(what), bound_(bound) {}

    Bound bound() const noexcept { return bound_; }

private:
    Bound bound_;
};

/// A finite-T approximation is outside its regime of validity.
class RegimeError : public Error {
public:
    using Error::Error;
};

/// Operation applied to data it was not designed for (wrong measure, ...).
class MisuseError : public Error {
public:
    using Error::Error;
};

/// Covariance accessor returned a zero variance where a ratio is needed.
class SingularError : public Error {
public:
    using Error::Error;
};

}  // namespace qvlab
