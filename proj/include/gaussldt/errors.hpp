#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gaussldt {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input (network file, CLI options).
class ConfigError : public Error {
public:
    using Error::Error;
};

// The unbiased dynamics has no stationary state, or an integration diverged.
class InstabilityError : public Error {
public:
    using Error::Error;
};

// No stabilizing Riccati solution at this bias value: s lies outside the
// domain of the large-deviation function (or on a branch point).
class DomainBoundary : public Error {
public:
    enum class Reason { dichotomy, singular_basis, residual, certificate };

    DomainBoundary(double s, Reason reason, const std::string& what)
        : Error(what), s_(s), reason_(reason) {}

    double s() const noexcept { return s_; }
    Reason reason() const noexcept { return reason_; }

private:
    double s_;
    Reason reason_;
};

// Every requested bias value fell outside the domain.
class DomainEmpty : public Error {
public:
    using Error::Error;
};

// The truncated Fock-space oracle refused a problem that is too large.
class ResourceRefusal : public Error {
public:
    ResourceRefusal(const std::string& what, std::size_t required_bytes)
        : Error(what), required_bytes_(required_bytes) {}

    std::size_t required_bytes() const noexcept { return required_bytes_; }

private:
    std::size_t required_bytes_;
};

// An iterative procedure did not meet its tolerance. Carries the last estimate.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double last_estimate)
        : Error(what), last_estimate_(last_estimate) {}

    double last_estimate() const noexcept { return last_estimate_; }

private:
    double last_estimate_;
};

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int config = 2;
inline constexpr int instability = 3;
inline constexpr int domain_empty = 4;
inline constexpr int resource = 5;
} // namespace exit_code

// Maps an exception to the CLI exit-code taxonomy.
inline int exit_code_for(const std::exception& e) noexcept {
    if (dynamic_cast<const ConfigError*>(&e)) return exit_code::config;
    if (dynamic_cast<const DomainEmpty*>(&e)) return exit_code::domain_empty;
    if (dynamic_cast<const ResourceRefusal*>(&e)) return exit_code::resource;
    return exit_code::instability;
}

} // namespace gaussldt
