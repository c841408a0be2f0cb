#pragma once

#include <stdexcept>
#include <string>

namespace ivselect {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or non-finite input data, dimension mismatches.
class InputError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration (CLI flags, scenario files).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Least-squares design is numerically rank deficient.
class SingularityError : public Error {
public:
    SingularityError(const std::string& column, const std::string& what)
        : Error(what), column_(column) {}
    const std::string& column() const noexcept { return column_; }

private:
    std::string column_;
};

/// Binary response with a single observed class.
class DegenerateOutcomeError : public Error {
public:
    using Error::Error;
};

/// Candidate instrument without usable variation.
class DegenerateInstrumentError : public Error {
public:
    using Error::Error;
};

/// Propensity score outside the trimmed interval at score evaluation.
class TrimmingViolation : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

/// An instrument bin is empty inside a training fold.
class FoldDegeneracyError : public Error {
public:
    using Error::Error;
};

class DegenerateVarianceError : public Error {
public:
    using Error::Error;
};

}  // namespace ivselect
