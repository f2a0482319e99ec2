#pragma once

#include <stdexcept>
#include <string>

namespace stepsalt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed trajectory-log record; the message names the offending field.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A value that parsed but violates a domain invariant.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Non-finite reward or advantage on the way out.
class SerializationError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration (match config, env spec, train config, h < 1, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An advantage estimator was asked for something undefined (e.g. G < 2).
class EstimatorError : public Error {
 public:
  using Error::Error;
};

/// A graph, group and advantage arrays that do not describe the same rollouts.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an operation's precondition (unset advantages, missing
/// behavior probabilities, out-of-range step index, empty input).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

}  // namespace stepsalt
