#pragma once

#include <stdexcept>
#include <string>

namespace lagfield {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Two grids (or a grid and a row) disagree on mesh or field dimension.
class MeshMismatch : public Error {
public:
    using Error::Error;
};

/// Invalid construction parameters (mesh sizes, configs, coefficients).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A NaN or infinity appeared where a finite value is required.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// The mixed block d^2 L / da db is not invertible at the current iterate.
class SingularJacobian : public Error {
public:
    using Error::Error;
};

/// Newton iteration exhausted its iteration budget.
class NoConvergence : public Error {
public:
    using Error::Error;
};

/// No real wave speed solves the dispersion relation for the requested mode.
class ResonantMode : public Error {
public:
    using Error::Error;
};

/// Malformed or incompatible file contents.
class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace lagfield
