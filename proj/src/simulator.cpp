#include "nfb/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "nfb/error.hpp"

namespace nfb {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::Configuration, what);
}

// Paul Kellet's refined pink filter: pole/gain pairs plus the direct terms.
constexpr double kPoles[6] = {0.99886, 0.99332, 0.96900, 0.86650, 0.55000, -0.7616};
constexpr double kGains[6] = {0.0555179, 0.0750759, 0.1538520, 0.3104856, 0.5329522, -0.0168980};
constexpr double kDirect = 0.5362;
constexpr double kDelayed = 0.115926;

// Output standard deviation of the filter for unit white input, from the
// impulse response.
double pink_unit_sd() {
  double var = 0.0;
  for (int k = 0; k < 40000; ++k) {
    double h = 0.0;
    for (int i = 0; i < 6; ++i) h += kGains[i] * std::pow(kPoles[i], k);
    if (k == 0) h += kDirect;
    if (k == 1) h += kDelayed;
    var += h * h;
  }
  return std::sqrt(var);
}

}  // namespace

void AttentionProfile::validate() const {
  require(std::isfinite(feedback_coupling) && feedback_coupling >= 0, "profile: feedback_coupling must be >= 0");
  if (kind == ProfileKind::Scripted) {
    require(!scripted_points.empty(), "profile: scripted profile needs at least one point");
    for (std::size_t i = 0; i < scripted_points.size(); ++i) {
      const auto [t, a] = scripted_points[i];
      require(std::isfinite(t) && std::isfinite(a), "profile: non-finite scripted point");
      require(a >= 0.0 && a <= 1.0, "profile: scripted attention must lie in [0,1]");
      if (i > 0) require(t >= scripted_points[i - 1].first, "profile: scripted points must be sorted by t");
    }
  } else {
    require(std::isfinite(ou.mean) && ou.mean >= 0.0 && ou.mean <= 1.0, "profile: ou mean must lie in [0,1]");
    require(std::isfinite(ou.reversion_rate) && ou.reversion_rate > 0, "profile: ou reversion_rate must be > 0");
    require(std::isfinite(ou.volatility) && ou.volatility >= 0, "profile: ou volatility must be >= 0");
  }
}

void SimulatorConfig::validate() const {
  require(std::isfinite(mu_frequency_hz) && mu_frequency_hz > 0, "simulator: mu_frequency_hz must be > 0");
  require(std::isfinite(mu_amplitude_uv) && mu_amplitude_uv >= 0, "simulator: mu_amplitude_uv must be >= 0");
  require(std::isfinite(noise_rms_uv) && noise_rms_uv >= 0, "simulator: noise_rms_uv must be >= 0");
  require(std::isfinite(coupling_decay_s) && coupling_decay_s > 0, "simulator: coupling_decay_s must be > 0");
}

LatentAttention::LatentAttention(const AttentionProfile& profile)
    : profile_(profile), rng_(profile.seed), ou_state_(profile.ou.mean) {
  profile_.validate();
}

double LatentAttention::base_at(double t) {
  if (profile_.kind == ProfileKind::Scripted) {
    const auto& pts = profile_.scripted_points;
    if (t <= pts.front().first) return pts.front().second;
    if (t >= pts.back().first) return pts.back().second;
    auto hi = std::upper_bound(pts.begin(), pts.end(), t,
                               [](double v, const auto& p) { return v < p.first; });
    auto lo = std::prev(hi);
    const double span = hi->first - lo->first;
    if (span <= 0) return hi->second;
    const double w = (t - lo->first) / span;
    return lo->second + w * (hi->second - lo->second);
  }

  const double dt = t - last_t_;
  if (dt > 0) {
    const auto& p = profile_.ou;
    const double decay = std::exp(-p.reversion_rate * dt);
    const double sd = p.volatility * std::sqrt((1.0 - decay * decay) / (2.0 * p.reversion_rate));
    ou_state_ = p.mean + (ou_state_ - p.mean) * decay + sd * normal_(rng_);
    ou_state_ = std::clamp(ou_state_, 0.0, 1.0);
  }
  return ou_state_;
}

double LatentAttention::at(double t) {
  const double base = base_at(t);
  if (t > boost_t_) {
    boost_ *= std::exp(-(t - boost_t_) / decay_s_);
    boost_t_ = t;
  }
  last_t_ = std::max(last_t_, t);
  return std::clamp(base + boost_, 0.0, 1.0);
}

void LatentAttention::reinforce(double t) {
  if (profile_.feedback_coupling <= 0) return;
  if (t > boost_t_) {
    boost_ *= std::exp(-(t - boost_t_) / decay_s_);
    boost_t_ = t;
  }
  boost_ += profile_.feedback_coupling;
}

EegSimulator::EegSimulator(AttentionProfile profile, DspConfig dsp, SimulatorConfig sim)
    : dsp_(dsp), sim_(sim), latent_(profile), noise_rng_(profile.seed ^ 0x9e3779b97f4a7c15ull) {
  dsp_.validate();
  sim_.validate();
  latent_.decay_s_ = sim_.coupling_decay_s;
  const auto channels = static_cast<std::size_t>(dsp_.channel_count);
  pink_.resize(channels);
  phase_.resize(channels);
  std::uniform_real_distribution<double> uniform(0.0, 2.0 * std::numbers::pi);
  for (auto& p : phase_) p = uniform(noise_rng_);
}

double EegSimulator::pink(PinkState& s) {
  const double w = normal_(noise_rng_);
  s.b0 = kPoles[0] * s.b0 + w * kGains[0];
  s.b1 = kPoles[1] * s.b1 + w * kGains[1];
  s.b2 = kPoles[2] * s.b2 + w * kGains[2];
  s.b3 = kPoles[3] * s.b3 + w * kGains[3];
  s.b4 = kPoles[4] * s.b4 + w * kGains[4];
  s.b5 = kPoles[5] * s.b5 + w * kGains[5];
  const double out = s.b0 + s.b1 + s.b2 + s.b3 + s.b4 + s.b5 + s.b6 + w * kDirect;
  s.b6 = w * kDelayed;
  return out;
}

EegFrame EegSimulator::next_frame() {
  static const double unit_sd = pink_unit_sd();
  const std::size_t len = dsp_.hop_samples();
  EegFrame frame;
  frame.t = time();
  last_latent_ = latent_.at(frame.t);
  const double amplitude = sim_.mu_amplitude_uv * (1.0 - last_latent_);
  const double noise_scale = sim_.noise_rms_uv / unit_sd;
  const double omega = 2.0 * std::numbers::pi * sim_.mu_frequency_hz;

  frame.channels.assign(phase_.size(), std::vector<double>(len));
  for (std::size_t n = 0; n < len; ++n) {
    const double t = static_cast<double>(sample_index_ + n) / dsp_.sample_rate_hz;
    for (std::size_t c = 0; c < phase_.size(); ++c) {
      const double mu = amplitude * std::sin(omega * t + phase_[c]);
      frame.channels[c][n] = mu + noise_scale * pink(pink_[c]);
    }
  }
  sample_index_ += len;
  return frame;
}

std::vector<EegFrame> generate_frames(const AttentionProfile& profile, const DspConfig& cfg, double duration_s,
                                      const SimulatorConfig& sim) {
  if (!std::isfinite(duration_s) || duration_s <= 0) {
    throw Error(ErrorCode::Configuration, "generate_frames: duration_s must be > 0");
  }
  EegSimulator simulator(profile, cfg, sim);
  std::vector<EegFrame> frames;
  while (simulator.time() + 1e-9 < duration_s) frames.push_back(simulator.next_frame());
  return frames;
}

}  // namespace nfb
