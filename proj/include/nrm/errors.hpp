#pragma once

#include <stdexcept>
#include <string>

namespace nrm {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Malformed input file; the message carries line/field context.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Well-formed input that violates a model invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

class StateUnderflow : public Error {
public:
    using Error::Error;
};

/// Problem too large for exhaustive methods.
class CapacityError : public Error {
public:
    using Error::Error;
};

class IncompleteTable : public Error {
public:
    using Error::Error;
};

class DegenerateDirection : public Error {
public:
    using Error::Error;
};

/// Duals do not belong to the row sets they are combined with.
class StaleDuals : public Error {
public:
    using Error::Error;
};

/// Row generation keeps producing rows already in the master.
class StallError : public Error {
public:
    StallError(int period, const std::string& what)
        : Error(what), period_(period) {}
    int period() const { return period_; }

private:
    int period_;
};

}  // namespace nrm
