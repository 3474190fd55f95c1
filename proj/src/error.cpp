#include "nfb/error.hpp"

namespace nfb {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Configuration:
      return "configuration";
    case ErrorCode::InsufficientData:
      return "insufficient_data";
    case ErrorCode::CalibrationRequired:
      return "calibration_required";
    case ErrorCode::CalibrationIncomplete:
      return "calibration_incomplete";
    case ErrorCode::Validation:
      return "validation";
    case ErrorCode::PhaseRule:
      return "phase_rule";
    case ErrorCode::SessionComplete:
      return "session_complete";
    case ErrorCode::NoData:
      return "no_data";
    case ErrorCode::Protocol:
      return "protocol";
    case ErrorCode::Encode:
      return "encode";
    case ErrorCode::CorruptLog:
      return "corrupt_log";
  }
  return "unknown";
}

}  // namespace nfb
