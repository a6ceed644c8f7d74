#pragma once

#include <stdexcept>
#include <string>

namespace cpes {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input document could not be parsed.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Input parsed but violates a model invariant. The message names it.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Reference to a bus, branch, sensor, controller or ICT component that
/// does not exist.
class UnknownIdError : public Error {
 public:
  explicit UnknownIdError(const std::string& what_kind, const std::string& id)
      : Error("unknown " + what_kind + " '" + id + "'"), id_(id) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

/// Setpoint outside the controllable's range.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Iterative solver did not converge within its iteration cap.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, int iterations, double final_mismatch)
      : Error(what), iterations_(iterations), final_mismatch_(final_mismatch) {}
  int iterations() const noexcept { return iterations_; }
  double final_mismatch() const noexcept { return final_mismatch_; }

 private:
  int iterations_;
  double final_mismatch_;
};

/// Gain matrix too ill-conditioned to solve.
class IllConditionedError : public Error {
 public:
  using Error::Error;
};

/// Pseudo-measurement substitution would exceed the configured cap.
class PseudoCapExceeded : public Error {
 public:
  using Error::Error;
};

/// Classifier operands that no formal state condition accepts.
class InconsistentEvidence : public Error {
 public:
  using Error::Error;
};

}  // namespace cpes
