#pragma once

#include <stdexcept>
#include <string>

namespace shrinker {

/// Broad failure categories. The CLI maps these onto its exit codes.
enum class ErrorKind {
    domain,          ///< argument outside the mathematical domain (r <= 0, F <= 0, ...)
    invalid_curve,   ///< curve violates a CrossSection precondition
    solver,          ///< shooting / integration failure
    spectral,        ///< assembly or eigensolver failure, inertia mismatch
    coverage,        ///< not enough Fourier modes supplied
    bound_violation, ///< a computed count falls outside a proven bound
    io,              ///< file or format error
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::invalid_curve: return "invalid_curve";
    case ErrorKind::solver: return "solver";
    case ErrorKind::spectral: return "spectral";
    case ErrorKind::coverage: return "coverage";
    case ErrorKind::bound_violation: return "bound_violation";
    case ErrorKind::io: return "io";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(ErrorKind::domain, what) {}
};

class CurveError : public Error {
public:
    explicit CurveError(const std::string& what) : Error(ErrorKind::invalid_curve, what) {}
};

/// Shooting failures carry a sub-reason so callers can tell a missed bracket
/// from an orbit that ran into the axis.
class SolverError : public Error {
public:
    enum class Reason { no_sign_change, not_converged, arclength_cap, axis, escaped };

    SolverError(Reason reason, const std::string& what)
        : Error(ErrorKind::solver, what), reason_(reason) {}

    Reason reason() const noexcept { return reason_; }

private:
    Reason reason_;
};

inline const char* to_string(SolverError::Reason reason) {
    switch (reason) {
    case SolverError::Reason::no_sign_change: return "no_sign_change";
    case SolverError::Reason::not_converged: return "not_converged";
    case SolverError::Reason::arclength_cap: return "arclength_cap";
    case SolverError::Reason::axis: return "axis";
    case SolverError::Reason::escaped: return "escaped";
    }
    return "unknown";
}

class SpectralError : public Error {
public:
    explicit SpectralError(const std::string& what) : Error(ErrorKind::spectral, what) {}
};

class CoverageError : public Error {
public:
    explicit CoverageError(const std::string& what) : Error(ErrorKind::coverage, what) {}
};

class BoundViolation : public Error {
public:
    BoundViolation(int mode, const std::string& what)
        : Error(ErrorKind::bound_violation, what), mode_(mode) {}

    int mode() const noexcept { return mode_; }

private:
    int mode_;
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

} // namespace shrinker
