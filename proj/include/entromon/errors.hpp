#pragma once

#include <stdexcept>
#include <string>

namespace entromon {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// normalize() was handed a vector with no positive mass.
class AllZeroMassError : public Error {
public:
    using Error::Error;
};

/// KL divergence requested where p has mass outside q's support.
class SupportMismatchError : public Error {
public:
    using Error::Error;
};

/// An argument fell outside its documented domain.
class OutOfRangeError : public Error {
public:
    using Error::Error;
};

/// Too few samples/points for the requested estimate.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

/// An iterative solver exceeded its iteration budget.
class NonConvergenceError : public Error {
public:
    using Error::Error;
};

/// A nested-resampling factor has fewer than two replicates.
class InsufficientReplicatesError : public Error {
public:
    using Error::Error;
};

/// Agreement table whose chance-agreement term divides by zero.
class DegenerateTableError : public Error {
public:
    using Error::Error;
};

/// Correlation input with no variance.
class ZeroVarianceError : public Error {
public:
    using Error::Error;
};

/// Any failure talking to a generation or classification endpoint.
class ClientError : public Error {
public:
    using Error::Error;
};

class TimeoutError : public ClientError {
public:
    using ClientError::ClientError;
};

class AuthFailureError : public ClientError {
public:
    using ClientError::ClientError;
};

/// Endpoint response violated the wire schema.
class MalformedResponseError : public ClientError {
public:
    using ClientError::ClientError;
};

/// Transient-failure retries were spent without success.
class ExhaustedRetriesError : public ClientError {
public:
    using ClientError::ClientError;
};

/// Classification service returned a label outside g1..g5.
class UnknownLabelError : public ClientError {
public:
    using ClientError::ClientError;
};

/// Fewer than the requested k responses could be labeled in strict mode.
class PartialBatchError : public Error {
public:
    using Error::Error;
};

/// A second retrain trigger was registered.
class AlreadyRegisteredError : public Error {
public:
    using Error::Error;
};

/// Alert delivery to a sink or trigger failed (recorded, never fatal).
class SinkError : public Error {
public:
    using Error::Error;
};

/// Configuration file is invalid (unknown key, bad value, missing file).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A persisted record or file could not be parsed.
class ParseError : public Error {
public:
    using Error::Error;
};

} // namespace entromon
