#pragma once

#include <stdexcept>

namespace mrf {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Violated precondition or type invariant (bad schedule, tissue, config, ...).
struct PreconditionError : Error {
    using Error::Error;
};

/// Non-finite intermediate state, degenerate step, or other numeric failure.
struct NumericError : Error {
    using Error::Error;
};

/// Zero-sensitivity case where a variance bound has no finite value.
struct NonIdentifiableError : NumericError {
    using NumericError::NumericError;
};

/// Malformed input file (CSV, config, manifest).
struct ParseError : Error {
    using Error::Error;
};

} // namespace mrf
