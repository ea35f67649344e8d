#pragma once

#include <stdexcept>
#include <string>

namespace sdwave {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user-facing configuration; `field()` names the offending key.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& message)
        : Error(field + ": " + message), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// A covariance matrix produced a pivot that is negative beyond round-off.
class NotPositiveSemidefinite : public Error {
public:
    using Error::Error;
};

/// The nonlinearity or the time march produced NaN or Inf.
class NonFiniteValue : public Error {
public:
    using Error::Error;
};

/// A fine time grid does not subdivide a coarse one.
class RatioMismatch : public Error {
public:
    using Error::Error;
};

/// An approximation has more modes than the reference it is compared to.
class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// Too few points or a zero error in a log-log fit.
class DegenerateFit : public Error {
public:
    using Error::Error;
};

}  // namespace sdwave
