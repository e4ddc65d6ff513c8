#pragma once

#include <stdexcept>
#include <string>

namespace blowup {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid parameters, malformed configuration or out-of-range requests.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure failed (non-convergence, instability, degenerate fit).
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace blowup
