#pragma once

#include <stdexcept>
#include <string>

namespace wbcp {

// Base class for every error the library can raise on bad input or
// unrecoverable numerical state. CLI maps these to exit code 2.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

// All candidate weights are zero (or prune to zero): no usable profile.
class WeightDegeneracy : public Error {
public:
    using Error::Error;
};

// A geographic operation was asked to run on records without coordinates.
class MissingLocations : public Error {
public:
    using Error::Error;
};

// CSV input violates the documented schema; message carries the line number.
class SchemaError : public Error {
public:
    using Error::Error;
};

// A parsed numeric field is NaN or infinite.
class NonFiniteValue : public Error {
public:
    using Error::Error;
};

// Loss bound B smaller than the largest observed loss.
class BoundViolation : public Error {
public:
    using Error::Error;
};

// A statistic that needs variation was handed a constant field.
class ConstantField : public Error {
public:
    using Error::Error;
};

// The jittered covariance matrix is not positive definite.
class FactorizationFailure : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace wbcp
