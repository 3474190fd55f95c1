#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "nfb/dsp.hpp"

namespace nfb {

enum class ProfileKind { Scripted, OrnsteinUhlenbeck };

struct OuParams {
  double mean{0.4};
  double reversion_rate{0.2};  // 1/s
  double volatility{0.1};      // 1/sqrt(s)
};

// Latent attention of the simulated child over session time. Scripted
// profiles interpolate linearly between (t, attention) breakpoints and hold
// the end values outside them.
struct AttentionProfile {
  ProfileKind kind{ProfileKind::Scripted};
  std::vector<std::pair<double, double>> scripted_points;
  OuParams ou{};
  std::uint64_t seed{1};
  double feedback_coupling{0.0};  // latent boost per positive feedback event

  void validate() const;
};

struct SimulatorConfig {
  double mu_frequency_hz{10.0};
  double mu_amplitude_uv{10.0};  // at zero attention
  double noise_rms_uv{5.0};      // pink noise
  double coupling_decay_s{5.0};  // time constant of the feedback boost

  void validate() const;
};

class LatentAttention {
 public:
  explicit LatentAttention(const AttentionProfile& profile);

  // Advance to time t (non-decreasing) and return the clamped latent value.
  double at(double t);
  void reinforce(double t);

 private:
  double base_at(double t);

  AttentionProfile profile_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  double ou_state_;
  double last_t_{0.0};
  double boost_{0.0};
  double boost_t_{0.0};
  double decay_s_{5.0};

  friend class EegSimulator;
};

// Pink noise plus a mu-band sinusoid whose amplitude is linear in
// (1 - latent attention). Deterministic for a given profile seed.
class EegSimulator {
 public:
  EegSimulator(AttentionProfile profile, DspConfig dsp, SimulatorConfig sim = {});

  // Next block of hop_s seconds.
  EegFrame next_frame();
  // Feed a positive feedback event back into the latent process.
  void reinforce(double t) { latent_.reinforce(t); }

  double time() const { return static_cast<double>(sample_index_) / dsp_.sample_rate_hz; }
  double last_latent() const { return last_latent_; }

 private:
  struct PinkState {
    double b0{0}, b1{0}, b2{0}, b3{0}, b4{0}, b5{0}, b6{0};
  };
  double pink(PinkState& s);

  DspConfig dsp_;
  SimulatorConfig sim_;
  LatentAttention latent_;
  std::mt19937_64 noise_rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::vector<PinkState> pink_;
  std::vector<double> phase_;
  std::uint64_t sample_index_{0};
  double last_latent_{0.0};
};

std::vector<EegFrame> generate_frames(const AttentionProfile& profile, const DspConfig& cfg, double duration_s,
                                      const SimulatorConfig& sim = {});

}  // namespace nfb
