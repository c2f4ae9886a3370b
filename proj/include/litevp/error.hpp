#pragma once

#include <stdexcept>
#include <string>

namespace litevp {

// Base for every error the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller passed data that violates an operation's precondition.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Structured input (Y4M header, JSON document) could not be decoded.
class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Binary container is corrupt (bad magic, truncated, checksum mismatch).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Binary container is well formed but written for another format/layout version.
class VersionError : public Error {
 public:
  using Error::Error;
};

/// A tensor op produced NaN or Inf.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Broken internal contract (shape mismatch between fixed layers, etc).
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace litevp
