#include "nfb/pipeline.hpp"

#include <cmath>

#include "nfb/error.hpp"

namespace nfb {

namespace {
constexpr double kEps = 1e-9;
}

void PipelineConfig::validate() const {
  dsp.validate();
  session.calibration.validate();
  session.engine.validate();
  if (!std::isfinite(customization_s) || customization_s < 0) {
    throw Error(ErrorCode::Configuration, "customization_s must be >= 0");
  }
}

SessionPipeline::SessionPipeline(PipelineConfig cfg) : cfg_(std::move(cfg)), engine_(cfg_.session), tracker_(cfg_.dsp) {
  cfg_.validate();
}

Records SessionPipeline::start(double t) {
  start_t_ = t;
  auto out = engine_.start(t);
  if (cfg_.customization_s <= 0) {
    auto cal = engine_.begin_calibration(t);
    out.insert(out.end(), cal.begin(), cal.end());
  }
  return out;
}

std::optional<double> SessionPipeline::reference_power() const {
  if (frozen_reference_) return frozen_reference_;
  if (rest_count_ > 0 && engine_.phase() != SessionPhase::Customization) {
    return rest_sum_ / static_cast<double>(rest_count_);
  }
  if (calibration_count_ > 0) return calibration_sum_ / static_cast<double>(calibration_count_);
  return std::nullopt;
}

Records SessionPipeline::maybe_begin_calibration(double t, bool inclusive) {
  if (!engine_.started() || engine_.phase() != SessionPhase::Customization) return {};
  const double boundary = start_t_ + cfg_.customization_s;
  const bool due = inclusive ? t + kEps >= boundary : t > boundary + kEps;
  if (!due) return {};
  auto out = engine_.begin_calibration(inclusive ? t : boundary);
  if (rest_count_ > 0) frozen_reference_ = rest_sum_ / static_cast<double>(rest_count_);
  return out;
}

Records SessionPipeline::feed(const AttentionSample& sample) {
  Records out = maybe_begin_calibration(sample.t, false);
  auto fed = engine_.on_sample(sample);
  out.insert(out.end(), fed.begin(), fed.end());
  auto begun = maybe_begin_calibration(sample.t, true);
  out.insert(out.end(), begun.begin(), begun.end());
  return out;
}

Records SessionPipeline::on_sample(const AttentionSample& sample) {
  if (!engine_.started() || engine_.paused() || engine_.phase() == SessionPhase::Conclusion) return {};
  return feed(sample);
}

Records SessionPipeline::on_frame(const EegFrame& frame) {
  if (!engine_.started() || engine_.paused() || engine_.phase() == SessionPhase::Conclusion) return {};
  Records out;
  for (const auto& power : tracker_.push(frame)) {
    if (engine_.phase() == SessionPhase::Conclusion) break;
    if (engine_.phase() == SessionPhase::Customization) {
      auto early = maybe_begin_calibration(power.t, false);
      out.insert(out.end(), early.begin(), early.end());
    }
    if (engine_.phase() == SessionPhase::Customization) {
      rest_sum_ += power.power;
      ++rest_count_;
      auto begun = maybe_begin_calibration(power.t, true);
      out.insert(out.end(), begun.begin(), begun.end());
      continue;
    }
    if (!frozen_reference_ && engine_.phase() == SessionPhase::Calibration) {
      // No rest data: the reference is the running mean over calibration.
      calibration_sum_ += power.power;
      ++calibration_count_;
    }
    const auto reference = reference_power();
    if (!reference) continue;
    const double index = attention_index(power.power, *reference, cfg_.dsp);
    auto fed = engine_.on_sample({power.t, index});
    out.insert(out.end(), fed.begin(), fed.end());
    if (!frozen_reference_ && engine_.phase() != SessionPhase::Calibration) frozen_reference_ = reference_power();
  }
  return out;
}

Records SessionPipeline::resume(double t) {
  tracker_.reset();
  return engine_.resume(t);
}

}  // namespace nfb
