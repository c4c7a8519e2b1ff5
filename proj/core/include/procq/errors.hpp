#pragma once

#include <stdexcept>
#include <string>

namespace procq {

// Error taxonomy shared across the library. The CLI maps these onto
// exit codes (solver -> 2, parse -> 3, domain -> 4).
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionError : Error {
  explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// Numerical preconditions violated (non-Hermitian input, NaN, eigensolver
// breakdown).
struct NumericsError : Error {
  explicit NumericsError(const std::string& msg) : Error(msg) {}
};

// SDP solver failed to converge or suspected infeasibility.
struct SolverError : Error {
  explicit SolverError(const std::string& msg) : Error(msg) {}
};

// Out-of-range parameters, vanished transport probability, near-singular
// inversion and similar domain-level failures.
struct DomainError : Error {
  explicit DomainError(const std::string& msg) : Error(msg) {}
};

// Malformed channel spec files / CLI configuration.
struct ParseError : Error {
  explicit ParseError(const std::string& msg) : Error(msg) {}
};

}  // namespace procq
