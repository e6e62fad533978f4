#pragma once

#include <stdexcept>
#include <string>

namespace dpp {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed arguments: non-finite positions, duplicate node ids, bad counts.
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

/// A node triple/pair does not satisfy the role requirements of an operation.
class InvalidRolesError : public Error {
 public:
  using Error::Error;
};

/// A required transmit/receive record is absent from a trace.
class IncompleteTraceError : public Error {
 public:
  using Error::Error;
};

/// A span denominator is too small (or negative) to divide by.
class DegenerateScheduleError : public Error {
 public:
  using Error::Error;
};

/// Schedule construction was asked for a system with no transmitting node.
class EmptyScheduleError : public Error {
 public:
  using Error::Error;
};

/// Parameter outside the domain of a formula (e.g. DJKM anchor count <= 2).
class OutOfDomainError : public Error {
 public:
  using Error::Error;
};

/// Two measurements that must share a key triple do not.
class InvalidPairingError : public Error {
 public:
  using Error::Error;
};

/// Simulation produced a non-finite timestamp.
class SimulationError : public Error {
 public:
  using Error::Error;
};

/// Base class for solver failures.
class SolveError : public Error {
 public:
  using Error::Error;
};

/// Not enough anchors / measurements to determine a position or frame.
class InsufficientInputError : public SolveError {
 public:
  using SolveError::SolveError;
};

/// A distance set cannot be embedded in the requested dimension.
class MetricFeasibilityError : public SolveError {
 public:
  using SolveError::SolveError;
};

/// Scenario file rejected; `path` points at the offending field.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::string path)
      : Error(what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace dpp
