#pragma once

#include <stdexcept>
#include <string>

namespace simplexscope {

/// Base class for all errors thrown by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed argument: shape mismatch, negative entries, out-of-range value.
class InvalidInputError : public Error {
public:
    using Error::Error;
};

/// Input is structurally valid but degenerate for the requested operation
/// (e.g. zero distance vector where a scale is needed).
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

/// An enumeration or allocation would exceed a configured cap.
class ResourceLimitError : public Error {
public:
    using Error::Error;
};

/// A least-squares fit has no usable degrees of freedom.
class DegenerateFitError : public Error {
public:
    using Error::Error;
};

/// File or stream I/O failure.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace simplexscope
