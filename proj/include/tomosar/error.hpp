#pragma once

#include <stdexcept>
#include <string>

namespace tomosar {

// Root of every exception thrown by the library. The CLI maps subclasses to
// exit codes, so keep the hierarchy flat and the categories coarse.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidGeometry : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class CapacityError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class LineSearchFailure : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class EstimationError : public Error {
public:
    using Error::Error;
};

// Malformed input files. Carries a line/column when the parser can give one.
class FormatError : public Error {
public:
    explicit FormatError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
        : Error(what), line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

// Inputs that parse fine but disagree with each other (e.g. stack N vs geometry N).
class ConsistencyError : public Error {
public:
    using Error::Error;
};

} // namespace tomosar
