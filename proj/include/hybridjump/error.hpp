#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hybridjump {

enum class ErrorCode {
  NonFiniteCoefficient,
  RateBoundViolated,
  QuadratureDivergence,
  InfiniteMass,
  NonPSDCovariance,
  MissingDerivative,
  RegionMeasureMismatch,
  ParameterConstraintViolated,
  EmptySample,
  DegenerateFit,
  ConfigError,
  InvalidArgument,
};

constexpr std::string_view to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::NonFiniteCoefficient: return "NonFiniteCoefficient";
    case ErrorCode::RateBoundViolated: return "RateBoundViolated";
    case ErrorCode::QuadratureDivergence: return "QuadratureDivergence";
    case ErrorCode::InfiniteMass: return "InfiniteMass";
    case ErrorCode::NonPSDCovariance: return "NonPSDCovariance";
    case ErrorCode::MissingDerivative: return "MissingDerivative";
    case ErrorCode::RegionMeasureMismatch: return "RegionMeasureMismatch";
    case ErrorCode::ParameterConstraintViolated: return "ParameterConstraintViolated";
    case ErrorCode::EmptySample: return "EmptySample";
    case ErrorCode::DegenerateFit: return "DegenerateFit";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hybridjump
