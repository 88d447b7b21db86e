#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tensorsplit {

enum class ErrorCode {
  ConfigInvalid,
  InclusionViolated,
  OracleUnavailable,
  NormDegenerate,
  NotCompact,
  EnumerationCap,
  OrderOutOfRange,
  NormInfinite,
  QTildeOutOfRange,
  TailUnavailable,
  DegenerateDenominator,
  GammaL1Violated,
  KernelAsymmetric,
  SolveFailed,
  InvalidArgument,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::InclusionViolated: return "InclusionViolated";
    case ErrorCode::OracleUnavailable: return "OracleUnavailable";
    case ErrorCode::NormDegenerate: return "NormDegenerate";
    case ErrorCode::NotCompact: return "NotCompact";
    case ErrorCode::EnumerationCap: return "EnumerationCap";
    case ErrorCode::OrderOutOfRange: return "OrderOutOfRange";
    case ErrorCode::NormInfinite: return "NormInfinite";
    case ErrorCode::QTildeOutOfRange: return "QTildeOutOfRange";
    case ErrorCode::TailUnavailable: return "TailUnavailable";
    case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorCode::GammaL1Violated: return "GammaL1Violated";
    case ErrorCode::KernelAsymmetric: return "KernelAsymmetric";
    case ErrorCode::SolveFailed: return "SolveFailed";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Base exception for every failure raised by the library. The code is
/// stable and is what the CLI maps onto exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace tensorsplit
