#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <span>
#include <vector>

namespace nfb {

struct FrequencyBand {
  double low_hz{8.0};
  double high_hz{13.0};
};

struct DspConfig {
  double sample_rate_hz{256.0};
  int channel_count{5};
  FrequencyBand mu_band{};
  double window_s{2.0};
  double hop_s{1.0};
  double kappa{std::log(4.0)};

  // Throws Error(Configuration) on non-finite or inconsistent fields.
  void validate() const;

  std::size_t window_samples() const;
  std::size_t hop_samples() const;
  // Welch segment length: half the analysis window.
  std::size_t segment_samples() const;
};

// One block of raw EEG. channels[c][n] in microvolts; t is the time of the
// first sample in seconds since session start.
struct EegFrame {
  double t{0.0};
  std::vector<std::vector<double>> channels;

  std::size_t block_len() const { return channels.empty() ? 0 : channels.front().size(); }
};

struct AttentionSample {
  double t{0.0};
  double index{0.0};

  bool operator==(const AttentionSample&) const = default;
};

// One-sided power spectral density, bins at k * df.
struct Psd {
  double df{0.0};
  std::vector<double> values;
};

// Averaged modified periodograms: periodic Hann window, 50% overlap. Units of
// the input squared per Hz.
Psd welch_psd(std::span<const double> x, double sample_rate_hz, std::size_t segment_len);

// Integral of the PSD over bins whose centre frequency lies in [low, high].
double integrate_band(const Psd& psd, const FrequencyBand& band);

// Mean over channels of the integrated band power of the trailing window_s of
// samples. Throws Error(InsufficientData) if the frames hold fewer samples.
double band_power(std::span<const EegFrame> frames, const FrequencyBand& band, const DspConfig& cfg);

// 100 * clamp(ln(p_baseline / max(p_current, 1e-12)) / kappa, 0, 1).
// Throws Error(CalibrationRequired) unless p_baseline > 0.
double attention_index(double p_current, double p_baseline, const DspConfig& cfg);

struct BandPowerSample {
  double t{0.0};  // end of the analysis window
  double power{0.0};
};

// Streaming window over incoming frames; yields one mu band power per hop
// once a full window has been seen.
class MuPowerTracker {
 public:
  explicit MuPowerTracker(DspConfig cfg);

  std::vector<BandPowerSample> push(const EegFrame& frame);
  void reset();

  const DspConfig& config() const { return cfg_; }

 private:
  DspConfig cfg_;
  std::vector<std::deque<double>> buffers_;
  std::size_t since_last_emit_{0};
  std::size_t total_{0};
};

}  // namespace nfb
