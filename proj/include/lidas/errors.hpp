#pragma once

#include <stdexcept>
#include <string>

namespace lidas {

/// Base of every error thrown by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ValueError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ModelError : public Error {
 public:
  using Error::Error;
};

class CalibrationError : public Error {
 public:
  using Error::Error;
};

class BudgetError : public Error {
 public:
  using Error::Error;
};

class PolicyError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// External scorer failures. Each kind is distinct so callers can decide
// whether to retry; none of them leaves the client in a corrupted state
// other than TransportError, after which the connection is closed.
class ScorerError : public Error {
 public:
  using Error::Error;
};

class TransportError : public ScorerError {
 public:
  using ScorerError::ScorerError;
};

class ProtocolError : public ScorerError {
 public:
  using ScorerError::ScorerError;
};

class VersionMismatchError : public ScorerError {
 public:
  using ScorerError::ScorerError;
};

class TimeoutError : public ScorerError {
 public:
  using ScorerError::ScorerError;
};

}  // namespace lidas
