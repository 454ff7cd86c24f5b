#pragma once

#include <stdexcept>
#include <string>

namespace ptnn {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Reshape target volume differs from the source volume.
class VolumeMismatch : public Error {
public:
    using Error::Error;
};

/// Dimensions invalid for the requested construction (zero extents, d == 0, ...).
class BadDimensions : public Error {
public:
    using Error::Error;
};

/// Operation needs more tensor modes than the argument has.
class RankTooLow : public Error {
public:
    using Error::Error;
};

/// NaN or Inf encountered where finite scalars are required.
class NonFiniteData : public Error {
public:
    using Error::Error;
};

/// The SVD backend failed to produce factors meeting the contract tolerances.
class ConvergenceFailure : public Error {
public:
    using Error::Error;
};

/// Matrix volume is prime, no d >= 2 factorization with extents >= 2 exists.
class UnfactorableVolume : public Error {
public:
    using Error::Error;
};

/// Argument shape does not match what the plan or model expects.
class ShapeMismatch : public Error {
public:
    using Error::Error;
};

/// Per-layer parameter sums exceed the declared model total.
class InconsistentTotals : public Error {
public:
    using Error::Error;
};

/// The accuracy oracle failed to evaluate a bundle.
class OracleFailure : public Error {
public:
    using Error::Error;
};

/// File could not be opened, read, or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// File does not start with the expected magic bytes.
class BadMagic : public Error {
public:
    using Error::Error;
};

/// File carries a format version this build does not understand.
class UnsupportedVersion : public Error {
public:
    using Error::Error;
};

/// Declared lengths and actual file contents disagree (truncation, overrun).
class CorruptLength : public Error {
public:
    using Error::Error;
};

}  // namespace ptnn
