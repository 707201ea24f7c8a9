#pragma once

#include <stdexcept>
#include <string>

namespace oprisk {

// Base of everything the library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Parameters outside a family's domain (sigma <= 0, xi < 0, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// Input data that cannot be used: too few losses, support violations,
// malformed files, bad flags.
class DataError : public Error {
public:
    using Error::Error;
};

// Unsupported family/estimator combinations, c-table lookups.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Root finding, quadrature or matrix inversion that did not work out.
class NumericError : public Error {
public:
    using Error::Error;
};

// An estimator ran but could not produce a number (e.g. every ellipse discarded).
class EstimationError : public Error {
public:
    using Error::Error;
};

} // namespace oprisk
