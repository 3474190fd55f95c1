#pragma once

#include <optional>
#include <vector>

#include "nfb/dsp.hpp"
#include "nfb/engine.hpp"

namespace nfb {

enum class DeviceMode { Simulator, Passthrough };

struct PipelineConfig {
  DspConfig dsp{};
  SessionConfig session{};
  // Headband on, no stimuli: the mu power measured here is the reference the
  // attention index is computed against.
  double customization_s{10.0};

  void validate() const;
};

// DSP front end plus session engine. Raw frames go through the mu power
// tracker; devices that compute the index themselves feed samples directly.
class SessionPipeline {
 public:
  explicit SessionPipeline(PipelineConfig cfg);

  Records start(double t);
  Records on_frame(const EegFrame& frame);
  Records on_sample(const AttentionSample& sample);
  Records request_thresholds(double t, double t1, double t2) { return engine_.request_thresholds(t, t1, t2); }
  Records pause(double t, std::string reason) { return engine_.pause(t, std::move(reason)); }
  Records resume(double t);
  Records stop(double t, std::string reason = "stopped") { return engine_.stop(t, std::move(reason)); }

  // Forget buffered EEG (stream discontinuity such as a reconnect).
  void reset_stream() { tracker_.reset(); }

  const SessionEngine& engine() const { return engine_; }
  const PipelineConfig& config() const { return cfg_; }
  // Reference mu power, once established.
  std::optional<double> reference_power() const;

 private:
  Records feed(const AttentionSample& sample);
  Records maybe_begin_calibration(double t, bool inclusive);

  PipelineConfig cfg_;
  SessionEngine engine_;
  MuPowerTracker tracker_;
  double start_t_{0.0};
  double rest_sum_{0.0};
  std::size_t rest_count_{0};
  double calibration_sum_{0.0};
  std::size_t calibration_count_{0};
  std::optional<double> frozen_reference_;
};

}  // namespace nfb
