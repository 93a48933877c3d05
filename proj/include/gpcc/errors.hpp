#pragma once

#include <stdexcept>
#include <string>

namespace gpcc {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised by file readers; carries a best-effort location.
struct ParseError : Error {
    using Error::Error;
};

// Raised when a loaded or constructed object breaks a structural invariant.
struct ValidationError : Error {
    using Error::Error;
};

struct SpecMismatch : Error {
    using Error::Error;
};

struct SingularJacobian : Error {
    using Error::Error;
};

struct DegenerateCase : Error {
    using Error::Error;
};

struct TooManyFailures : Error {
    using Error::Error;
};

struct FactorizationFailure : Error {
    using Error::Error;
};

struct AllRestartsFailed : Error {
    using Error::Error;
};

struct DomainError : Error {
    using Error::Error;
};

struct InvalidAlpha : Error {
    using Error::Error;
};

struct PropagationFailure : Error {
    using Error::Error;
};

struct InfeasibleSubproblem : Error {
    using Error::Error;
};

}  // namespace gpcc
