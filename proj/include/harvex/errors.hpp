#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace harvex {

// Machine-readable failure codes. The CLI maps ValidationError/SchemaError to
// exit code 2, NumericError to exit code 1.
enum class ErrorCode {
  // input validation
  AsymmetricWeights,
  NegativeWeight,
  SelfLoop,
  DisconnectedGraph,
  NonPositiveOperator,
  BadSimplex,
  BadDimension,
  BadParameter,
  NonPsdScatter,
  DimensionMismatch,
  SchemaError,
  IoError,
  // numeric / regime failures discovered during evaluation
  DegenerateEigenvalue,
  NonPositiveEigenvector,
  DegenerateTheta,
  NegativeBracket,
  NonPositiveState,
  AsymptoticsInvalid,
  DivisionByZero,
  NoConvergence,
  SingularIterate,
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::AsymmetricWeights: return "AsymmetricWeights";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::NonPositiveOperator: return "NonPositiveOperator";
    case ErrorCode::BadSimplex: return "BadSimplex";
    case ErrorCode::BadDimension: return "BadDimension";
    case ErrorCode::BadParameter: return "BadParameter";
    case ErrorCode::NonPsdScatter: return "NonPsdScatter";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::DegenerateEigenvalue: return "DegenerateEigenvalue";
    case ErrorCode::NonPositiveEigenvector: return "NonPositiveEigenvector";
    case ErrorCode::DegenerateTheta: return "DegenerateTheta";
    case ErrorCode::NegativeBracket: return "NegativeBracket";
    case ErrorCode::NonPositiveState: return "NonPositiveState";
    case ErrorCode::AsymptoticsInvalid: return "AsymptoticsInvalid";
    case ErrorCode::DivisionByZero: return "DivisionByZero";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::SingularIterate: return "SingularIterate";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string field, const std::string& message)
      : std::runtime_error(field.empty()
                               ? std::string(error_code_name(code)) + ": " + message
                               : std::string(error_code_name(code)) + " at '" + field +
                                     "': " + message),
        code_(code),
        field_(std::move(field)) {}

  ErrorCode code() const noexcept { return code_; }

  // Dotted path of the offending input field, empty when not applicable.
  const std::string& field() const noexcept { return field_; }

 private:
  ErrorCode code_;
  std::string field_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

// Structural problem in a scenario file (missing key, wrong type, bad version).
class SchemaError : public ValidationError {
 public:
  SchemaError(std::string field, const std::string& message)
      : ValidationError(ErrorCode::SchemaError, std::move(field), message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error(ErrorCode::IoError, "", message) {}
};

}  // namespace harvex
