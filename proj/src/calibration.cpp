#include "nfb/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nfb/error.hpp"
#include "nfb/numeric.hpp"

namespace nfb {

std::string_view to_string(ThresholdSource s) {
  return s == ThresholdSource::Adaptive ? "adaptive" : "manual";
}

void CalibrationConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::Configuration, std::string("calibration config: ") + what);
  };
  require(std::isfinite(alpha) && std::isfinite(beta) && 0 < alpha && alpha < 1 && 1 < beta,
          "need 0 < alpha < 1 < beta");
  require(std::isfinite(lower_bound) && std::isfinite(upper_bound) && 0 <= lower_bound &&
              lower_bound < upper_bound && upper_bound <= 100,
          "need 0 <= lower_bound < upper_bound <= 100");
  require(std::isfinite(calibration_duration_s) && calibration_duration_s > 0, "calibration_duration_s must be > 0");
  require(min_samples >= 1, "min_samples must be >= 1");
  require(std::isfinite(repair_width) && repair_width > 0, "repair_width must be > 0");
}

double compute_baseline(std::span<const AttentionSample> samples, const CalibrationConfig& cfg) {
  if (samples.size() < static_cast<std::size_t>(cfg.min_samples)) {
    throw Error(ErrorCode::CalibrationIncomplete, "calibration has " + std::to_string(samples.size()) +
                                                      " samples, need " + std::to_string(cfg.min_samples));
  }
  double sum = 0.0;
  for (const auto& s : samples) sum += s.index;
  return std::clamp(sum / static_cast<double>(samples.size()), 0.0, 100.0);
}

Thresholds compute_thresholds(double baseline, const CalibrationConfig& cfg) {
  if (!std::isfinite(baseline) || baseline < 0 || baseline > 100) {
    throw Error(ErrorCode::Validation, "baseline must lie in [0,100]");
  }
  Thresholds th;
  th.baseline = normalize_number(baseline);
  th.t1 = std::max(cfg.lower_bound, baseline * cfg.alpha);
  th.t2 = std::min(cfg.upper_bound, baseline * cfg.beta);
  if (th.t2 <= th.t1) th.t2 = std::min(cfg.upper_bound, th.t1 + cfg.repair_width);
  th.t1 = normalize_number(th.t1);
  th.t2 = normalize_number(th.t2);
  th.source = ThresholdSource::Adaptive;
  return th;
}

Thresholds set_manual_thresholds(double t1, double t2) {
  if (!std::isfinite(t1) || !std::isfinite(t2) || t1 < 0 || t2 > 100 || !(t1 < t2)) {
    throw Error(ErrorCode::Validation, "manual thresholds require 0 <= t1 < t2 <= 100");
  }
  Thresholds th;
  th.t1 = normalize_number(t1);
  th.t2 = normalize_number(t2);
  th.baseline = 0.0;
  th.source = ThresholdSource::Manual;
  return th;
}

}  // namespace nfb
