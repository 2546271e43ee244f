#pragma once

#include <stdexcept>
#include <string>

namespace mcrepar {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Argument outside a function's mathematical domain (ln of a non-positive
// value, reciprocal of zero, sample off the family's support).
struct DomainError : Error {
    using Error::Error;
};

// A forward build produced a non-finite node value.
struct NonFiniteError : Error {
    using Error::Error;
};

// Distribution parameter outside its admissible region (sigma <= 0, rate <= 0).
struct ParameterDomainError : Error {
    using Error::Error;
};

// Radial direction vector too close to zero to normalize.
struct DegenerateDirectionError : Error {
    using Error::Error;
};

struct UnknownPriorError : Error {
    using Error::Error;
};

// No factored estimator exists for this (family, g) pair.
struct UnsupportedGError : Error {
    using Error::Error;
};

// A log-density term has no factored route for this posterior and no Taylor
// expansion was configured.
struct UnsupportedTermError : Error {
    using Error::Error;
};

struct UnsupportedPosteriorError : Error {
    using Error::Error;
};

struct UnsupportedTaskError : Error {
    using Error::Error;
};

// Training produced a non-finite loss.
struct DivergenceError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what, int line_no = 0)
        : Error(what), line(line_no) {}
    int line;
};

}  // namespace mcrepar
