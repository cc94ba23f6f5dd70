#pragma once

#include <stdexcept>
#include <string>

namespace fairrank {

// Base of every library error. The CLI maps subclasses onto exit codes:
// user/config mistakes exit 2, runtime/data failures exit 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad user-supplied configuration (invalid lambda, layer counts, flags).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Tensor dimension mismatch between operands.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Internal contract violation, e.g. a backward pass fed a stale cache.
class InvariantError : public Error {
public:
    using Error::Error;
};

// Non-finite value where a finite one is required.
class NumericError : public Error {
public:
    using Error::Error;
};

// Malformed input file; message names the offending row/column.
class ParseError : public Error {
public:
    using Error::Error;
};

// Filesystem failure.
class IoError : public Error {
public:
    using Error::Error;
};

// A fairness group selected by a mask has no members.
class EmptyGroupError : public Error {
public:
    using Error::Error;
};

// Train-mode batch too small for batch statistics.
class DegenerateBatchError : public Error {
public:
    using Error::Error;
};

// A gain metric whose baseline reference is zero.
class UndefinedMetricError : public Error {
public:
    using Error::Error;
};

}  // namespace fairrank
