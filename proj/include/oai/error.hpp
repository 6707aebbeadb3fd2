#pragma once

#include <stdexcept>
#include <string>

namespace oai {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on user-supplied parameters was violated.
class DomainError : public Error {
public:
    using Error::Error;
};

/// The ODE integration left its invariant envelope (norm, trace, positivity).
class IntegrationError : public Error {
public:
    using Error::Error;
};

/// A fit or model evaluation could not be carried out on the given data.
class FitError : public Error {
public:
    using Error::Error;
};

namespace detail {

[[noreturn]] inline void domain_fail(const std::string& what) { throw DomainError(what); }

inline void require(bool ok, const std::string& what)
{
    if (!ok) domain_fail(what);
}

} // namespace detail
} // namespace oai
