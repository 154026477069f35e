#pragma once

#include <stdexcept>
#include <string>

namespace dvars {

// Base for every error raised by the library. Callers that only need a
// message can catch this; the subclasses let tests and the CLI tell
// precondition violations apart from data that is merely degenerate.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Arguments outside an operation's domain (empty input, bad probability, ...).
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Well-formed input on which a statistic is undefined, e.g. the lag-1
/// correlation of a constant trace.
class DegenerateInput : public Error {
public:
    using Error::Error;
};

/// File system and file format failures.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace dvars
