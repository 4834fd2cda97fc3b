// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace cogmimo {

/// Argument outside the domain of an operation (bad angle, empty antenna set, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent configuration input.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Overlapping Hankel blocks disagree by more than the allowed tolerance.
class AssemblyError : public std::runtime_error {
 public:
  AssemblyError(const std::string& what, double max_discrepancy)
      : std::runtime_error(what), max_discrepancy_(max_discrepancy) {}
  double max_discrepancy() const noexcept { return max_discrepancy_; }

 private:
  double max_discrepancy_;
};

/// Factorization failed even after diagonal loading.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The antenna selection constraints admit no solution.
///
/// `certificate` holds nonnegative multipliers on the isolation rows that
/// prove infeasibility of the relaxed polytope; `violation` is the smallest
/// uniform relaxation of those rows that would make it feasible.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what, std::vector<double> certificate = {},
                  double violation = 0.0)
      : std::runtime_error(what), certificate_(std::move(certificate)), violation_(violation) {}
  const std::vector<double>& certificate() const noexcept { return certificate_; }
  double violation() const noexcept { return violation_; }

 private:
  std::vector<double> certificate_;
  double violation_;
};

/// Iterative solver stopped without meeting its tolerance.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, int iterations, double residual)
      : std::runtime_error(what), iterations_(iterations), residual_(residual) {}
  int iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  int iterations_;
  double residual_;
};

/// Enumeration would exceed the configured combinatorial budget.
class CombinatorialLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cogmimo
