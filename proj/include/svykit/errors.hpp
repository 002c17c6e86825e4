#pragma once

#include <stdexcept>
#include <string>

namespace svykit {

/// Base class for all library failures. Subclasses form a small taxonomy so
/// callers (and the CLI exit-code mapping) can triage without string matching.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input table is structurally unusable: missing required column, no rows.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Malformed numeric cell or bad grammar token; message names the location.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Invalid parameter value (negative variance, out-of-range correlation, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Configuration inconsistent with the population it is applied to.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Operation undefined for the given design kind.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Singular or ill-conditioned linear solve.
class RankError : public Error {
 public:
  using Error::Error;
};

/// A required joint inclusion probability is zero.
class SupportError : public Error {
 public:
  using Error::Error;
};

/// Enumeration would exceed the configured cap.
class CapError : public Error {
 public:
  using Error::Error;
};

}  // namespace svykit
