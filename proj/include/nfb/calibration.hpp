#pragma once

#include <span>
#include <string_view>

#include "nfb/dsp.hpp"

namespace nfb {

struct CalibrationConfig {
  double alpha{0.8};
  double beta{1.3};
  double lower_bound{10.0};
  double upper_bound{85.0};
  double calibration_duration_s{60.0};
  int min_samples{30};
  // Width of the medium band forced when the clamped thresholds cross.
  double repair_width{10.0};

  void validate() const;
};

enum class ThresholdSource { Adaptive, Manual };

std::string_view to_string(ThresholdSource s);

struct Thresholds {
  double baseline{0.0};
  double t1{0.0};
  double t2{100.0};
  ThresholdSource source{ThresholdSource::Adaptive};

  bool operator==(const Thresholds&) const = default;
};

// Arithmetic mean of the calibration-phase indices. Throws
// Error(CalibrationIncomplete) when fewer than min_samples are given.
double compute_baseline(std::span<const AttentionSample> samples, const CalibrationConfig& cfg);

// t1 = max(LB, alpha*b), t2 = min(UB, beta*b); when that leaves no medium band
// the upper threshold is moved to min(UB, t1 + repair_width).
Thresholds compute_thresholds(double baseline, const CalibrationConfig& cfg);

// Facilitator-designated pair. Requires 0 <= t1 < t2 <= 100, otherwise
// Error(Validation).
Thresholds set_manual_thresholds(double t1, double t2);

}  // namespace nfb
