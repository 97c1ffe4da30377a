#pragma once

#include <stdexcept>
#include <string>

namespace fpc {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or image extents that do not fit an operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A NaN or Inf escaped a numeric kernel.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Serialized-format failures. Each failure mode has its own type so callers
// (and tests) can tell a wrong file from a damaged one.
class FormatError : public Error {
 public:
  using Error::Error;
};
class BadMagicError : public FormatError {
 public:
  using FormatError::FormatError;
};
class VersionMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};
class TruncatedError : public FormatError {
 public:
  using FormatError::FormatError;
};
class InconsistentShapeError : public FormatError {
 public:
  using FormatError::FormatError;
};
class ChecksumError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Entropy decoder ran into bytes that no encoder could have produced.
class DecodeError : public Error {
 public:
  using Error::Error;
};

/// Bitstream was produced with a different weight file.
class ModelMismatchError : public Error {
 public:
  using Error::Error;
};

/// Enhancement found nothing that looks like a ridge pattern.
class NoRidgeStructureError : public Error {
 public:
  using Error::Error;
};

/// Image file could not be read or written.
class ImageIoError : public Error {
 public:
  using Error::Error;
};

/// Too few points on an RD curve for the requested fit.
class ArityError : public Error {
 public:
  using Error::Error;
};

/// Two RD curves share no quality (or rate) interval.
class NoOverlapError : public Error {
 public:
  using Error::Error;
};

/// Bad user-supplied configuration (CLI, manifest, codec settings).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace fpc
