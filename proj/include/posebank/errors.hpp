#pragma once

#include <stdexcept>
#include <string>

namespace posebank {

// Base for everything thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad argument values: out-of-range sizes, negative gamma, invalid fractions.
class ParameterError : public Error {
public:
    using Error::Error;
};

// Dimension mismatches between inputs that must agree.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Unreadable or malformed input files.
class ParseError : public Error {
public:
    using Error::Error;
};

// Structurally valid file whose content violates the expected schema.
class SchemaError : public Error {
public:
    using Error::Error;
};

// Non-finite values, singular systems where a solution is required.
class NumericError : public Error {
public:
    using Error::Error;
};

// Requested subset size exceeds what the kernel rank supports.
class RankError : public NumericError {
public:
    using NumericError::NumericError;
};

// Control-point geometry that makes the TPS system singular.
class DegenerateGeometryError : public NumericError {
public:
    using NumericError::NumericError;
};

// Violations of memory bookkeeping rules (tombstone reuse, id collisions).
class IntegrityError : public Error {
public:
    using Error::Error;
};

}  // namespace posebank
