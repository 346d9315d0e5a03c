#pragma once

#include <stdexcept>
#include <string>

namespace nskqg {

/// Invalid configuration: bad grid size, inadmissible exponents, malformed
/// config documents.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An operation was called with arguments it does not accept (rank
/// mismatch, p < 1, too few trajectory states, ...).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A pointwise law was evaluated outside its domain (negative density).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Base for failures raised while time stepping. Carries the simulation time
/// of the last good state and the step index (-1 when unknown).
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double t, long step = -1)
      : std::runtime_error(what), t_(t), step_(step) {}

  double t() const noexcept { return t_; }
  long step() const noexcept { return step_; }

 private:
  double t_;
  long step_;
};

/// Density dropped to or below the configured floor.
class VacuumError : public SolverError {
 public:
  using SolverError::SolverError;
};

/// Non-finite values appeared in the state or a tendency.
class BlowUpError : public SolverError {
 public:
  using SolverError::SolverError;
};

/// Too few runs of an eps sweep succeeded to fit rates.
class SweepError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nskqg
