#pragma once

#include <stdexcept>
#include <string>

namespace cipm {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-range input values.
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

/// Mismatched matrix/vector dimensions across agents or blocks.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An iterate violates strict feasibility where it is required.
class FeasibilityError : public Error {
 public:
  using Error::Error;
};

/// A local KKT system is singular or numerically rank deficient.
class SingularKktError : public Error {
 public:
  SingularKktError(int agent, const std::string& what)
      : Error(what), agent_(agent) {}
  int agent() const { return agent_; }

 private:
  int agent_;
};

/// The aggregated root system is singular.
class SingularRootError : public Error {
 public:
  using Error::Error;
};

/// Backtracking could not find an acceptable step length.
class LineSearchError : public Error {
 public:
  LineSearchError(const std::string& what, double residual_before,
                  double residual_last)
      : Error(what),
        residual_before_(residual_before),
        residual_last_(residual_last) {}
  double residual_before() const { return residual_before_; }
  double residual_last() const { return residual_last_; }

 private:
  double residual_before_;
  double residual_last_;
};

/// Message-passing contract violation (ordering, staleness, timeout).
class ProtocolError : public Error {
 public:
  ProtocolError(int agent, const std::string& what)
      : Error(what), agent_(agent) {}
  int agent() const { return agent_; }

 private:
  int agent_;
};

/// No strictly feasible starting point could be constructed.
class UnsupportedInitializationError : public Error {
 public:
  using Error::Error;
};

/// A derivative-check trial point is infeasible for some component.
class RejectedPointError : public Error {
 public:
  RejectedPointError(int component, const std::string& what)
      : Error(what), component_(component) {}
  int component() const { return component_; }

 private:
  int component_;
};

/// Solver configuration fails validation.
class InvalidConfigError : public Error {
 public:
  using Error::Error;
};

/// A data file does not match its documented format.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, long line = -1)
      : Error(what), line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

/// A reference computation (closed form or iterative) failed to certify.
class OracleFailureError : public Error {
 public:
  using Error::Error;
};

} // namespace cipm
