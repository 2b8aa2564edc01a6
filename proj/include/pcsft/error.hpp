#pragma once

#include <stdexcept>
#include <string>

namespace pcsft {

enum class ErrorCode {
  NotSymmetric,
  NotPSD,
  ZeroTrace,
  DimMismatch,
  NoConvergence,
  NegativeTime,
  ZeroField,
  NotOrthonormal,
  BadChannel,
  NonPositiveStep,
  NoClicks,
  DegenerateRate,
  InsufficientClicks,
  ZeroPower,
  ZeroThreshold,
  BadArgs,
  BadConfig,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::ZeroTrace: return "ZeroTrace";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NegativeTime: return "NegativeTime";
    case ErrorCode::ZeroField: return "ZeroField";
    case ErrorCode::NotOrthonormal: return "NotOrthonormal";
    case ErrorCode::BadChannel: return "BadChannel";
    case ErrorCode::NonPositiveStep: return "NonPositiveStep";
    case ErrorCode::NoClicks: return "NoClicks";
    case ErrorCode::DegenerateRate: return "DegenerateRate";
    case ErrorCode::InsufficientClicks: return "InsufficientClicks";
    case ErrorCode::ZeroPower: return "ZeroPower";
    case ErrorCode::ZeroThreshold: return "ZeroThreshold";
    case ErrorCode::BadArgs: return "BadArgs";
    case ErrorCode::BadConfig: return "BadConfig";
  }
  return "Unknown";
}

/// Thrown by operations that reject their input or fail at run time.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const { return code_; }

  /// Input rejection (bad matrix, bad config), as opposed to a failure of the run itself.
  bool is_validation() const {
    switch (code_) {
      case ErrorCode::NoClicks:
      case ErrorCode::DegenerateRate:
      case ErrorCode::InsufficientClicks:
      case ErrorCode::NoConvergence:
        return false;
      default:
        return true;
    }
  }

 private:
  ErrorCode code_;
};

}  // namespace pcsft
