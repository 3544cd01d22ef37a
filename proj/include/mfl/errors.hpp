#pragma once

#include <stdexcept>
#include <string>

namespace mfl {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or non-finite inputs to an operation.
class InvalidInputError : public Error {
public:
    using Error::Error;
};

// Bad configuration: missing/unknown keys, inadmissible parameter combinations.
// Maps to exit status 1 in the CLI.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Problem size exceeds a configured limit.  Maps to exit status 1.
class CapacityError : public Error {
public:
    using Error::Error;
};

// Numerical failure at run time: divergence, collision invalidating a study,
// degenerate sampling.  Maps to exit status 2.
class NumericError : public Error {
public:
    NumericError(const std::string& msg, double last_good_time = -1.0)
        : Error(msg), last_good_time(last_good_time) {}
    double last_good_time;
};

// A quantitative assertion of a check-style subcommand failed.
// Maps to exit status 3.
class CheckFailure : public Error {
public:
    using Error::Error;
};

} // namespace mfl
