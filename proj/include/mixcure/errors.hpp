#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mixcure {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class SpecError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class SeparationError : public Error {
public:
    using Error::Error;
};

class RankError : public Error {
public:
    using Error::Error;
};

class DegenerateRiskSetError : public Error {
public:
    using Error::Error;
};

class InsufficientCuredError : public Error {
public:
    using Error::Error;
};

class NonConvergenceError : public Error {
public:
    using Error::Error;
};

class CalibrationError : public Error {
public:
    using Error::Error;
};

class OrderingError : public Error {
public:
    using Error::Error;
};

class BootstrapDegenerateError : public Error {
public:
    using Error::Error;
};

// Malformed input file; `line` is 1-based, 0 when not tied to a line.
class InputError : public Error {
public:
    InputError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what)
        , line_(line)
    {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

}  // namespace mixcure
