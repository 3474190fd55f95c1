#include "nfb/dsp.hpp"

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include "nfb/error.hpp"
#include "nfb/numeric.hpp"

namespace nfb {

namespace {

constexpr double kPowerFloor = 1e-12;

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::Configuration, "dsp config: " + what);
}

// FFTW plans are cached per length. Planning is not thread-safe in FFTW, so
// creation is serialized; execution with the new-array interface is.
class R2cPlan {
 public:
  explicit R2cPlan(std::size_t n) : n_(n) {
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
  }
  ~R2cPlan() {
    fftw_destroy_plan(plan_);
    fftw_free(in_);
    fftw_free(out_);
  }
  R2cPlan(const R2cPlan&) = delete;
  R2cPlan& operator=(const R2cPlan&) = delete;

  // |X_k|^2 for k = 0..n/2
  void power_spectrum(std::span<const double> x, std::vector<double>& out) {
    std::copy(x.begin(), x.end(), in_);
    fftw_execute(plan_);
    out.resize(n_ / 2 + 1);
    for (std::size_t k = 0; k < out.size(); ++k) {
      out[k] = out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1];
    }
  }

 private:
  std::size_t n_;
  double* in_{nullptr};
  fftw_complex* out_{nullptr};
  fftw_plan plan_{nullptr};
};

R2cPlan& plan_for(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::unique_ptr<R2cPlan>> plans;
  std::lock_guard lock(mu);
  auto& slot = plans[n];
  if (!slot) slot = std::make_unique<R2cPlan>(n);
  return *slot;
}

}  // namespace

void DspConfig::validate() const {
  require(std::isfinite(sample_rate_hz) && sample_rate_hz > 0, "sample_rate_hz must be positive");
  require(channel_count >= 1, "channel_count must be >= 1");
  require(std::isfinite(mu_band.low_hz) && std::isfinite(mu_band.high_hz) && mu_band.low_hz >= 0 &&
              mu_band.low_hz < mu_band.high_hz,
          "mu_band must satisfy 0 <= low < high");
  require(mu_band.high_hz <= sample_rate_hz / 2, "mu_band above Nyquist");
  require(std::isfinite(hop_s) && hop_s > 0, "hop_s must be positive");
  require(std::isfinite(window_s) && window_s >= hop_s, "window_s must be >= hop_s");
  require(std::isfinite(kappa) && kappa > 0, "kappa must be positive");
  require(segment_samples() >= 8, "window too short for spectral estimation");
}

std::size_t DspConfig::window_samples() const {
  return static_cast<std::size_t>(std::llround(window_s * sample_rate_hz));
}

std::size_t DspConfig::hop_samples() const {
  return static_cast<std::size_t>(std::llround(hop_s * sample_rate_hz));
}

std::size_t DspConfig::segment_samples() const { return window_samples() / 2; }

Psd welch_psd(std::span<const double> x, double sample_rate_hz, std::size_t segment_len) {
  if (segment_len < 2 || x.size() < segment_len) {
    throw Error(ErrorCode::InsufficientData, "welch_psd: fewer samples than one segment");
  }
  std::vector<double> window(segment_len);
  double window_power = 0.0;
  for (std::size_t n = 0; n < segment_len; ++n) {
    window[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                     static_cast<double>(segment_len));
    window_power += window[n] * window[n];
  }

  const std::size_t step = std::max<std::size_t>(1, segment_len / 2);
  const std::size_t bins = segment_len / 2 + 1;
  Psd psd;
  psd.df = sample_rate_hz / static_cast<double>(segment_len);
  psd.values.assign(bins, 0.0);

  auto& plan = plan_for(segment_len);
  std::vector<double> segment(segment_len);
  std::vector<double> spectrum;
  std::size_t count = 0;
  for (std::size_t start = 0; start + segment_len <= x.size(); start += step) {
    for (std::size_t n = 0; n < segment_len; ++n) segment[n] = x[start + n] * window[n];
    plan.power_spectrum(segment, spectrum);
    for (std::size_t k = 0; k < bins; ++k) psd.values[k] += spectrum[k];
    ++count;
  }

  const double scale = 1.0 / (sample_rate_hz * window_power * static_cast<double>(count));
  for (std::size_t k = 0; k < bins; ++k) {
    const bool edge = k == 0 || (segment_len % 2 == 0 && k == bins - 1);
    psd.values[k] *= scale * (edge ? 1.0 : 2.0);
  }
  return psd;
}

double integrate_band(const Psd& psd, const FrequencyBand& band) {
  double total = 0.0;
  for (std::size_t k = 0; k < psd.values.size(); ++k) {
    const double f = static_cast<double>(k) * psd.df;
    if (f >= band.low_hz && f <= band.high_hz) total += psd.values[k];
  }
  return total * psd.df;
}

double band_power(std::span<const EegFrame> frames, const FrequencyBand& band, const DspConfig& cfg) {
  cfg.validate();
  const std::size_t need = cfg.window_samples();
  std::size_t have = 0;
  for (const auto& f : frames) {
    if (static_cast<int>(f.channels.size()) != cfg.channel_count) {
      throw Error(ErrorCode::Configuration, "band_power: frame channel count mismatch");
    }
    have += f.block_len();
  }
  if (have < need) {
    throw Error(ErrorCode::InsufficientData, "band_power: window shorter than window_s (" +
                                                 std::to_string(have) + " < " + std::to_string(need) +
                                                 " samples)");
  }

  double sum = 0.0;
  std::vector<double> signal;
  signal.reserve(need);
  for (int c = 0; c < cfg.channel_count; ++c) {
    signal.clear();
    for (const auto& f : frames) {
      const auto& ch = f.channels[static_cast<std::size_t>(c)];
      signal.insert(signal.end(), ch.begin(), ch.end());
    }
    std::span<const double> tail(signal.data() + (signal.size() - need), need);
    sum += integrate_band(welch_psd(tail, cfg.sample_rate_hz, cfg.segment_samples()), band);
  }
  return sum / cfg.channel_count;
}

double attention_index(double p_current, double p_baseline, const DspConfig& cfg) {
  if (!(p_baseline > 0.0) || !std::isfinite(p_baseline)) {
    throw Error(ErrorCode::CalibrationRequired, "attention_index: baseline power must be > 0");
  }
  if (!std::isfinite(p_current) || !(cfg.kappa > 0.0)) {
    throw Error(ErrorCode::Configuration, "attention_index: non-finite input");
  }
  const double ratio = std::log(p_baseline / std::max(p_current, kPowerFloor)) / cfg.kappa;
  return 100.0 * std::clamp(ratio, 0.0, 1.0);
}

MuPowerTracker::MuPowerTracker(DspConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  buffers_.resize(static_cast<std::size_t>(cfg_.channel_count));
}

void MuPowerTracker::reset() {
  for (auto& b : buffers_) b.clear();
  since_last_emit_ = 0;
  total_ = 0;
}

std::vector<BandPowerSample> MuPowerTracker::push(const EegFrame& frame) {
  if (static_cast<int>(frame.channels.size()) != cfg_.channel_count) {
    throw Error(ErrorCode::Configuration, "frame has " + std::to_string(frame.channels.size()) +
                                              " channels, expected " + std::to_string(cfg_.channel_count));
  }
  const std::size_t len = frame.block_len();
  for (const auto& ch : frame.channels) {
    if (ch.size() != len) throw Error(ErrorCode::Configuration, "ragged eeg frame");
    for (double v : ch) {
      if (!std::isfinite(v)) throw Error(ErrorCode::Configuration, "non-finite eeg sample");
    }
  }

  const std::size_t window = cfg_.window_samples();
  const std::size_t hop = cfg_.hop_samples();
  std::vector<BandPowerSample> out;
  std::vector<double> scratch;
  for (std::size_t n = 0; n < len; ++n) {
    for (std::size_t c = 0; c < buffers_.size(); ++c) {
      auto& b = buffers_[c];
      b.push_back(frame.channels[c][n]);
      if (b.size() > window) b.pop_front();
    }
    ++total_;
    ++since_last_emit_;
    if (total_ < window) continue;
    if (total_ > window && since_last_emit_ < hop) continue;
    since_last_emit_ = 0;

    double sum = 0.0;
    for (const auto& b : buffers_) {
      scratch.assign(b.begin(), b.end());
      sum += integrate_band(welch_psd(scratch, cfg_.sample_rate_hz, cfg_.segment_samples()), cfg_.mu_band);
    }
    const double t_end = frame.t + static_cast<double>(n + 1) / cfg_.sample_rate_hz;
    out.push_back({normalize_number(t_end), sum / static_cast<double>(buffers_.size())});
  }
  return out;
}

}  // namespace nfb
