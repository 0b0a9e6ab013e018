#pragma once

#include <stdexcept>
#include <string>

namespace safelqr {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Matrix dimensions do not match the operation's requirements.
class DimensionError : public Error {
  public:
    using Error::Error;
};

/// Input contains NaN/Inf where finite values are required.
class ValidityError : public Error {
  public:
    using Error::Error;
};

/// A matrix that must be positive (semi)definite is not.
class DefinitenessError : public Error {
  public:
    using Error::Error;
};

/// An operation requiring a stable (spectral radius < 1) matrix got an
/// unstable one, e.g. a non-stabilizing gain.
class InstabilityError : public Error {
  public:
    using Error::Error;
};

/// The Riccati recursion diverged: the (A, B) pair is not stabilizable.
class StabilizabilityError : public Error {
  public:
    using Error::Error;
};

/// An iteration hit its cap before meeting the residual contract.
class ConvergenceError : public Error {
  public:
    ConvergenceError(const std::string& what, double last_residual)
        : Error(what), last_residual(last_residual) {}
    double last_residual;
};

/// A scalar parameter lies outside its mathematical domain (e.g. a
/// contraction rate outside (0, 1)).
class DomainError : public Error {
  public:
    using Error::Error;
};

/// A requested contraction rate cannot be certified for the given loop.
class InfeasibleRateError : public Error {
  public:
    using Error::Error;
};

/// A supplied certificate fails its own eigenvalue-margin invariant.
class CertificateError : public Error {
  public:
    using Error::Error;
};

/// An analysis precondition (threshold or dwell-time floor) is violated;
/// the requested bound does not apply there.
class PreconditionError : public Error {
  public:
    using Error::Error;
};

/// The least-squares regressor Gram matrix is singular and no ridge was given.
class RankError : public Error {
  public:
    using Error::Error;
};

/// A matrix text file is malformed.
class ParseError : public Error {
  public:
    using Error::Error;
};

}  // namespace safelqr
