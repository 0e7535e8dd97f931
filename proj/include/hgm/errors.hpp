#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hgm {

// Error taxonomy shared by every module. The CLI maps ValidationError (and
// its subclasses) to exit code 1 and IoError to exit code 2.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionError : Error {
    using Error::Error;
};

struct ValidationError : Error {
    using Error::Error;
};

// Raised when an input format (CPC code, checkpoint, CSV row) is malformed.
// `position` is the zero-based offset of the offending character.
struct ParseError : Error {
    ParseError(const std::string& what, std::size_t pos)
        : Error(what + " (at position " + std::to_string(pos) + ")"), position(pos) {}
    std::size_t position;
};

struct NumericError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

// A broken internal invariant: always a bug in this library, never bad input.
struct InternalError : Error {
    using Error::Error;
};

}  // namespace hgm
