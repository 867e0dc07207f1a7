#pragma once

#include <stdexcept>
#include <string>

namespace ctxassoc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A corpus or artifact file could not be parsed.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Parsed data violates a structural invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Bad configuration value or missing resource.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A single evidence segment could not be built. Callers usually drop the
/// segment and continue.
class SegmentError : public Error {
 public:
  using Error::Error;
};

/// Shapes or lengths that must agree do not.
class DimensionError : public Error {
 public:
  using Error::Error;
};

}  // namespace ctxassoc
