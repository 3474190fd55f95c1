#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "nfb/dsp.hpp"
#include "nfb/error.hpp"
#include "nfb/pipeline.hpp"
#include "nfb/simulator.hpp"
#include "oracles.hpp"

using namespace nfb;

namespace {

std::vector<double> tone(double freq, double amp, std::size_t n, double fs, double phase = 0.3) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2 * std::numbers::pi * freq * i / fs + phase);
  return x;
}

// One frame holding the same signal on every channel.
EegFrame frame_of(const std::vector<double>& x, int channels, double t = 0.0) {
  EegFrame f;
  f.t = t;
  f.channels.assign(static_cast<std::size_t>(channels), x);
  return f;
}

double power_of(const std::vector<double>& x, const DspConfig& cfg) {
  std::vector<EegFrame> frames{frame_of(x, cfg.channel_count)};
  return band_power(frames, cfg.mu_band, cfg);
}

AttentionProfile constant(double latent, std::uint64_t seed = 3) {
  AttentionProfile p;
  p.scripted_points = {{0.0, latent}};
  p.seed = seed;
  return p;
}

}  // namespace

TEST_CASE("pure 10 Hz tone: band power near A^2/2 and equal to the direct DFT estimate") {
  DspConfig cfg;
  for (double amp : {1.0, 10.0, 37.5}) {
    const auto x = tone(10.0, amp, cfg.window_samples(), cfg.sample_rate_hz);
    const double p = power_of(x, cfg);
    const double expected = amp * amp / 2;
    CHECK(std::abs(p - expected) / expected < 0.05);
    const double ref = oracle::dft_band_power(x, cfg.sample_rate_hz, cfg.segment_samples(), 8.0, 13.0);
    CHECK(p == doctest::Approx(ref).epsilon(1e-9));
  }
}

TEST_CASE("out-of-band 20 Hz tone contributes at most 2%") {
  DspConfig cfg;
  const double amp = 10.0;
  const auto x = tone(20.0, amp, cfg.window_samples(), cfg.sample_rate_hz);
  CHECK(power_of(x, cfg) <= 0.02 * amp * amp / 2);
  CHECK(oracle::dft_band_power(x, cfg.sample_rate_hz, cfg.segment_samples(), 8.0, 13.0) <= 0.02 * amp * amp / 2);
}

TEST_CASE("all-zero signal has zero band power") {
  DspConfig cfg;
  CHECK(power_of(std::vector<double>(cfg.window_samples(), 0.0), cfg) == 0.0);
}

TEST_CASE("band power is additive over well separated tones") {
  DspConfig cfg;
  const std::size_t n = cfg.window_samples();
  const auto a = tone(10.0, 6.0, n, cfg.sample_rate_hz);
  const auto b = tone(30.0, 9.0, n, cfg.sample_rate_hz, 1.1);
  std::vector<double> sum(n);
  for (std::size_t i = 0; i < n; ++i) sum[i] = a[i] + b[i];
  DspConfig wide = cfg;
  wide.mu_band = {5.0, 40.0};
  const double separate = power_of(a, wide) + power_of(b, wide);
  CHECK(std::abs(power_of(sum, wide) - separate) / separate < 0.05);
}

TEST_CASE("band power needs a full window") {
  DspConfig cfg;
  const auto x = tone(10.0, 1.0, cfg.window_samples() - 1, cfg.sample_rate_hz);
  std::vector<EegFrame> frames{frame_of(x, cfg.channel_count)};
  CHECK_THROWS_AS(band_power(frames, cfg.mu_band, cfg), Error);
  try {
    band_power(frames, cfg.mu_band, cfg);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientData);
  }
}

TEST_CASE("band power averages channels and uses the trailing window") {
  DspConfig cfg;
  cfg.channel_count = 2;
  const std::size_t n = cfg.window_samples();
  EegFrame f;
  f.channels = {tone(10.0, 4.0, n, cfg.sample_rate_hz), std::vector<double>(n, 0.0)};
  std::vector<EegFrame> one{f};
  CHECK(band_power(one, cfg.mu_band, cfg) == doctest::Approx(4.0).epsilon(0.05));

  // A leading block of loud signal outside the window is ignored.
  EegFrame early = frame_of(tone(10.0, 50.0, n / 2, cfg.sample_rate_hz), 2);
  EegFrame late = frame_of(tone(10.0, 2.0, n, cfg.sample_rate_hz), 2, 1.0);
  std::vector<EegFrame> frames{early, late};
  CHECK(band_power(frames, cfg.mu_band, cfg) == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("attention index endpoints and midpoint") {
  DspConfig cfg;
  CHECK(attention_index(8.0, 8.0, cfg) == 0.0);
  CHECK(attention_index(2.0, 8.0, cfg) == 100.0);
  CHECK(attention_index(4.0, 8.0, cfg) == doctest::Approx(100 * std::log(2.0) / std::log(4.0)).epsilon(1e-12));
  CHECK(attention_index(4.0, 8.0, cfg) == doctest::Approx(50.0).epsilon(1e-12));
  CHECK(attention_index(100.0, 8.0, cfg) == 0.0);
  CHECK(attention_index(0.0, 8.0, cfg) == 100.0);
  CHECK_THROWS_AS(attention_index(1.0, 0.0, cfg), Error);
  CHECK_THROWS_AS(attention_index(1.0, -1.0, cfg), Error);
  try {
    attention_index(1.0, 0.0, cfg);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CalibrationRequired);
  }
}

TEST_CASE("attention index is monotone in current power and scale invariant") {
  DspConfig cfg;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 50.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double base = 0.01 + u(rng);
    std::vector<double> grid(50);
    for (auto& g : grid) g = u(rng);
    std::sort(grid.begin(), grid.end());
    double prev = 101.0;
    for (double p : grid) {
      const double idx = attention_index(p, base, cfg);
      CHECK(idx <= prev);
      CHECK(idx >= 0.0);
      CHECK(idx <= 100.0);
      prev = idx;
      const double k = 0.1 + u(rng);
      CHECK(attention_index(p * k, base * k, cfg) == doctest::Approx(idx).epsilon(1e-9));
    }
  }
}

TEST_CASE("dsp config validation") {
  DspConfig ok;
  CHECK_NOTHROW(ok.validate());
  auto bad = [](auto mutate) {
    DspConfig c;
    mutate(c);
    CHECK_THROWS_AS(c.validate(), Error);
  };
  bad([](DspConfig& c) { c.sample_rate_hz = 0; });
  bad([](DspConfig& c) { c.sample_rate_hz = std::nan(""); });
  bad([](DspConfig& c) { c.channel_count = 0; });
  bad([](DspConfig& c) { c.mu_band = {13, 8}; });
  bad([](DspConfig& c) { c.window_s = 0.5; });
  bad([](DspConfig& c) { c.hop_s = 0; });
  bad([](DspConfig& c) { c.kappa = 0; });
  bad([](DspConfig& c) { c.kappa = INFINITY; });
}

TEST_CASE("mu power tracker emits one value per hop once a window is full") {
  DspConfig cfg;
  MuPowerTracker tracker(cfg);
  const std::size_t hop = cfg.hop_samples();
  std::vector<double> times;
  for (int k = 0; k < 6; ++k) {
    const auto x = tone(10.0, 3.0, hop, cfg.sample_rate_hz);
    for (const auto& p : tracker.push(frame_of(x, cfg.channel_count, k * cfg.hop_s))) {
      times.push_back(p.t);
      CHECK(p.power > 0);
    }
  }
  CHECK(times == std::vector<double>{2, 3, 4, 5, 6});
  tracker.reset();
  CHECK(tracker.push(frame_of(tone(10.0, 3.0, hop, cfg.sample_rate_hz), cfg.channel_count, 10)).empty());
}

TEST_CASE("simulator: zero attention keeps the full mu rhythm in every frame") {
  DspConfig cfg;
  SimulatorConfig sim;
  sim.noise_rms_uv = 0.0;
  const auto frames = generate_frames(constant(0.0), cfg, 10.0, sim);
  REQUIRE(frames.size() == 10);
  for (const auto& f : frames) {
    REQUIRE(f.channels.size() == 5);
    for (const auto& ch : f.channels) {
      double peak = 0;
      for (double v : ch) peak = std::max(peak, std::abs(v));
      CHECK(peak == doctest::Approx(sim.mu_amplitude_uv).epsilon(0.01));
    }
  }
  SimulatorConfig noisy;
  const auto with_noise = generate_frames(constant(0.0), cfg, 10.0, noisy);
  for (std::size_t k = 1; k < with_noise.size(); ++k) {
    std::vector<EegFrame> pair{with_noise[k - 1], with_noise[k]};
    CHECK(band_power(pair, cfg.mu_band, cfg) > 0.8 * noisy.mu_amplitude_uv * noisy.mu_amplitude_uv / 2);
  }
}

TEST_CASE("simulator: full attention leaves only noise") {
  DspConfig cfg;
  SimulatorConfig sim;
  SimulatorConfig silent = sim;
  silent.mu_amplitude_uv = 0.0;
  const auto a = generate_frames(constant(1.0), cfg, 10.0, sim);
  const auto b = generate_frames(constant(0.3), cfg, 10.0, silent);
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k].channels == b[k].channels);

  SimulatorConfig quiet = sim;
  quiet.noise_rms_uv = 0.0;
  for (const auto& f : generate_frames(constant(1.0), cfg, 10.0, quiet)) {
    for (const auto& ch : f.channels) {
      for (double v : ch) CHECK(v == 0.0);
    }
  }
}

TEST_CASE("simulator is deterministic per seed") {
  DspConfig cfg;
  AttentionProfile ou;
  ou.kind = ProfileKind::OrnsteinUhlenbeck;
  ou.seed = 42;
  const auto a = generate_frames(ou, cfg, 20.0);
  const auto b = generate_frames(ou, cfg, 20.0);
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].t == b[k].t);
    CHECK(a[k].channels == b[k].channels);
  }
  ou.seed = 43;
  const auto c = generate_frames(ou, cfg, 20.0);
  CHECK(a[0].channels != c[0].channels);
}

TEST_CASE("simulator noise level matches its configured rms") {
  DspConfig cfg;
  SimulatorConfig sim;
  sim.mu_amplitude_uv = 0.0;
  const auto frames = generate_frames(constant(0.0), cfg, 60.0, sim);
  long double ss = 0;
  std::size_t n = 0;
  for (const auto& f : frames) {
    for (const auto& ch : f.channels) {
      for (double v : ch) {
        ss += v * v;
        ++n;
      }
    }
  }
  CHECK(std::sqrt(static_cast<double>(ss / n)) == doctest::Approx(sim.noise_rms_uv).epsilon(0.15));
}

TEST_CASE("generate_frames rejects bad input") {
  DspConfig cfg;
  CHECK_THROWS_AS(generate_frames(constant(0.5), cfg, 0.0), Error);
  CHECK_THROWS_AS(generate_frames(constant(0.5), cfg, std::nan("")), Error);
  AttentionProfile bad = constant(0.5);
  bad.scripted_points = {{5.0, 0.2}, {1.0, 0.4}};
  CHECK_THROWS_AS(generate_frames(bad, cfg, 5.0), Error);
  bad.scripted_points = {{0.0, 1.5}};
  CHECK_THROWS_AS(generate_frames(bad, cfg, 5.0), Error);
  SimulatorConfig sim;
  sim.noise_rms_uv = INFINITY;
  CHECK_THROWS_AS(generate_frames(constant(0.5), cfg, 5.0, sim), Error);
}

TEST_CASE("latent attention follows the script, clamps and decays feedback boosts") {
  AttentionProfile p;
  p.scripted_points = {{0.0, 0.0}, {10.0, 1.0}};
  p.feedback_coupling = 0.5;
  LatentAttention latent(p);
  CHECK(latent.at(0.0) == 0.0);
  CHECK(latent.at(5.0) == doctest::Approx(0.5));
  latent.reinforce(5.0);
  CHECK(latent.at(5.0) == doctest::Approx(1.0));
  CHECK(latent.at(6.0) == 1.0);
  CHECK(latent.at(7.0) == 1.0);
  p.feedback_coupling = 0.1;
  LatentAttention small(p);
  small.reinforce(2.0);
  CHECK(small.at(3.0) == doctest::Approx(0.3 + 0.1 * std::exp(-1.0 / 5.0)));
  CHECK(latent.at(20.0) == 1.0);

  AttentionProfile ou;
  ou.kind = ProfileKind::OrnsteinUhlenbeck;
  ou.ou = {0.5, 1.0, 3.0};
  LatentAttention walk(ou);
  for (int i = 1; i < 500; ++i) {
    const double v = walk.at(i * 0.5);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("higher latent attention gives a higher index (20 seeds)") {
  PipelineConfig pc;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    double means[2];
    int k = 0;
    for (double latent : {0.1, 0.9}) {
      AttentionProfile p;
      p.scripted_points = {{0.0, 0.0}, {10.0, 0.0}, {10.0, latent}};
      p.seed = seed;
      EegSimulator sim(p, pc.dsp);
      MuPowerTracker tracker(pc.dsp);
      double rest = 0, sum = 0;
      int nrest = 0, n = 0;
      while (sim.time() < 60.0) {
        for (const auto& s : tracker.push(sim.next_frame())) {
          if (s.t <= 10.0) {
            rest += s.power;
            ++nrest;
          } else if (s.t >= 12.0) {
            const double idx = attention_index(s.power, rest / nrest, pc.dsp);
            CHECK(idx >= 0.0);
            CHECK(idx <= 100.0);
            sum += idx;
            ++n;
          }
        }
      }
      means[k++] = sum / n;
    }
    CHECK(means[1] > means[0]);
  }
}

TEST_CASE("pipeline references the customization-phase mu power") {
  PipelineConfig pc;
  SessionPipeline pipeline(pc);
  AttentionProfile p;
  p.scripted_points = {{0.0, 0.0}, {10.0, 0.0}, {10.0, 0.5}};
  EegSimulator sim(p, pc.dsp);
  auto records = pipeline.start(0.0);
  CHECK_FALSE(pipeline.reference_power().has_value());
  std::vector<double> indices;
  std::vector<double> times;
  while (sim.time() < 30.0) {
    for (const auto& r : pipeline.on_frame(sim.next_frame())) {
      if (const auto* s = std::get_if<AttentionSampleBody>(&r.body)) {
        indices.push_back(s->index);
        times.push_back(r.t);
      }
    }
  }
  REQUIRE(pipeline.reference_power().has_value());
  CHECK(*pipeline.reference_power() > 0);
  CHECK(pipeline.engine().phase() == SessionPhase::Calibration);
  // Customization yields no samples; calibration samples start right after it.
  REQUIRE_FALSE(times.empty());
  CHECK(times.front() == 11.0);
  CHECK(times.back() == 30.0);
  for (double v : indices) {
    CHECK(v >= 0.0);
    CHECK(v <= 100.0);
  }
}
