#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace nfb {

enum class ErrorCode {
  Configuration,
  InsufficientData,
  CalibrationRequired,
  CalibrationIncomplete,
  Validation,
  PhaseRule,
  SessionComplete,
  NoData,
  Protocol,
  Encode,
  CorruptLog,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported as nfb::Error; the code is stable and is
// what callers (CLI exit status, protocol error replies) switch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Decode failures carry a short machine-readable reason used in error replies.
class ProtocolError : public Error {
 public:
  ProtocolError(std::string reason_code, const std::string& detail)
      : Error(ErrorCode::Protocol, reason_code + ": " + detail), reason_code_(std::move(reason_code)) {}

  const std::string& reason_code() const noexcept { return reason_code_; }

 private:
  std::string reason_code_;
};

}  // namespace nfb
