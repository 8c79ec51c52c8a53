#pragma once

#include <stdexcept>
#include <string>

namespace putraffic {

// Invalid argument or precondition violation (negative time, schedule past
// horizon, length mismatch, ...). The CLI maps these to exit code 2.
class DomainError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

// The bias-corrected estimators divide by 1 - P_f - P_m.
class UndefinedEstimatorError : public DomainError {
  public:
    using DomainError::DomainError;
};

// Closed-form ML has no admissible root for the given transition counts.
class NoSolutionError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Enumeration oracles refuse inputs past their cost guard.
class RefusedError : public DomainError {
  public:
    using DomainError::DomainError;
};

class InfeasibleError : public DomainError {
  public:
    using DomainError::DomainError;
};

class SourceExhaustedError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace putraffic
