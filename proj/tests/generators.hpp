#pragma once

// Random well-formed messages and line mutations for round-trip and fuzz tests.

#include <random>
#include <string>

#include "nfb/engine.hpp"
#include "nfb/numeric.hpp"
#include "nfb/protocol.hpp"

namespace gen {

using Rng = std::mt19937_64;

inline double real(Rng& rng, double lo, double hi) {
  return nfb::normalize_number(std::uniform_real_distribution<double>(lo, hi)(rng));
}

inline std::int64_t integer(Rng& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

inline bool coin(Rng& rng) { return integer(rng, 0, 1) == 1; }

template <class E, std::size_t N>
E pick(Rng& rng, const std::array<E, N>& values) {
  return values[static_cast<std::size_t>(integer(rng, 0, N - 1))];
}

inline std::string word(Rng& rng) {
  static const char* words[] = {"a", "facilitator", "timeout", "héllo", "tab\there", "quote\"d", "line\nbreak", ""};
  return words[integer(rng, 0, 7)];
}

inline nlohmann::json payload(Rng& rng) {
  nlohmann::json j = nlohmann::json::object();
  const int n = static_cast<int>(integer(rng, 0, 3));
  for (int i = 0; i < n; ++i) {
    const std::string key = "k" + std::to_string(i);
    switch (integer(rng, 0, 4)) {
      case 0: j[key] = real(rng, -1e6, 1e6); break;
      case 1: j[key] = integer(rng, -1000, 1000); break;
      case 2: j[key] = word(rng); break;
      case 3: j[key] = coin(rng); break;
      default: j[key] = nlohmann::json::array({real(rng, 0, 1), "x", nullptr});
    }
  }
  return j;
}

inline nfb::Body body(Rng& rng, nfb::MessageType type) {
  using namespace nfb;
  static constexpr std::array stages = {PerformanceStage::Low, PerformanceStage::Medium, PerformanceStage::High};
  static constexpr std::array faces = {Face::Neutral, Face::Expecting, Face::Smiling, Face::Happy,
                                       Face::ExtremelyHappy};
  static constexpr std::array phases = {SessionPhase::Customization, SessionPhase::Calibration, SessionPhase::Training,
                                        SessionPhase::Conclusion};
  static constexpr std::array actions = {ControlAction::Start, ControlAction::Pause, ControlAction::Resume,
                                         ControlAction::Stop, ControlAction::Phase};
  switch (type) {
    case MessageType::Hello: {
      static constexpr std::array<const char*, 3> roles = {"headband", "observer", "console"};
      HelloBody b{roles[integer(rng, 0, 2)], std::nullopt, std::nullopt};
      if (coin(rng)) b.device = coin(rng) ? "simulator" : "passthrough";
      if (coin(rng)) b.name = word(rng);
      return b;
    }
    case MessageType::EegFrame: {
      EegFrameBody b{real(rng, 1, 1024), {}};
      const auto channels = integer(rng, 0, 5), len = integer(rng, 0, 8);
      for (int c = 0; c < channels; ++c) {
        std::vector<double> row;
        for (int i = 0; i < len; ++i) row.push_back(real(rng, -200, 200));
        b.channels.push_back(row);
      }
      return b;
    }
    case MessageType::AttentionSample: return AttentionSampleBody{real(rng, 0, 100)};
    case MessageType::CalibrateBegin: return CalibrateBeginBody{real(rng, 0.5, 600)};
    case MessageType::CalibrateResult:
      return CalibrateResultBody{real(rng, 0, 100), real(rng, 0, 50), real(rng, 50, 100),
                                 coin(rng) ? "adaptive" : "manual", integer(rng, 0, 600)};
    case MessageType::ThresholdSet: {
      ThresholdSetBody b{real(rng, 0, 50), real(rng, 50, 100), std::nullopt};
      if (coin(rng)) b.source = coin(rng) ? "adaptive" : "manual";
      return b;
    }
    case MessageType::SessionControl: {
      SessionControlBody b;
      b.action = pick(rng, actions);
      if (coin(rng)) b.phase = pick(rng, phases);
      if (coin(rng)) b.paused = coin(rng);
      if (coin(rng)) b.reason = word(rng);
      if (coin(rng)) b.session_id = word(rng);
      if (coin(rng)) b.character_skins = payload(rng);
      return b;
    }
    case MessageType::FeedbackEvent: {
      auto e = make_event(pick(rng, kAllFeedbackKinds), payload(rng));
      return e;
    }
    case MessageType::GameProgress: {
      GameProgressBody b;
      b.stage = pick(rng, stages);
      b.eggs_stored = integer(rng, 0, 60);
      b.eggs_in_flight = integer(rng, 0, 3);
      b.carts_filled = integer(rng, 0, 2);
      b.bird_height = real(rng, 0, 1);
      b.lay_interval_s = real(rng, 0, 6);
      b.music_tempo = pick(rng, stages);
      b.boy_face = pick(rng, faces);
      b.girl_face = pick(rng, faces);
      if (coin(rng)) {
        b.phase = pick(rng, phases);
        b.t1 = real(rng, 0, 50);
        b.t2 = real(rng, 50, 100);
        b.state_hash = snapshot_hash(b);
      }
      return b;
    }
    case MessageType::SessionReport: {
      SessionReportBody b;
      b.score = integer(rng, 0, 100);
      b.stars = integer(rng, 1, 3);
      b.duration_s = real(rng, 0, 1800);
      b.eggs_stored = integer(rng, 0, 60);
      b.t1 = real(rng, 0, 50);
      b.t2 = real(rng, 50, 100);
      b.completed = coin(rng);
      b.end_reason = word(rng);
      b.pct_low = real(rng, 0, 1);
      b.pct_medium = real(rng, 0, 1);
      b.pct_high = real(rng, 0, 1);
      b.up_switches = integer(rng, 0, 100);
      b.down_switches = integer(rng, 0, 100);
      b.game_up_switches = integer(rng, 0, 100);
      b.game_down_switches = integer(rng, 0, 100);
      b.mean_index = real(rng, 0, 100);
      b.sd_index = real(rng, 0, 50);
      return b;
    }
    case MessageType::Ack: return AckBody{integer(rng, 0, 1 << 20), pick(rng, kAllMessageTypes)};
    case MessageType::Error: {
      ErrorBody b{word(rng), word(rng), std::nullopt};
      if (coin(rng)) b.ref_seq = integer(rng, 0, 1 << 20);
      return b;
    }
  }
  return AckBody{};
}

inline nfb::Message message(Rng& rng, nfb::MessageType type) {
  nfb::Message m;
  m.t = real(rng, 0, 3600);
  m.seq = integer(rng, 0, 1LL << 40);
  m.body = body(rng, type);
  return m;
}

inline nfb::Message message(Rng& rng) { return message(rng, pick(rng, nfb::kAllMessageTypes)); }

// Byte-level corruption of a valid line: flips, deletions, insertions,
// truncation, splices and pure noise.
inline std::string mutate(Rng& rng, std::string line) {
  if (!line.empty() && line.back() == '\n') line.pop_back();
  static const std::string alphabet = "{}[]\",:0123456789.eE+-truefalsn \\\t\x01\xff\xc3";
  const int edits = static_cast<int>(integer(rng, 1, 4));
  for (int e = 0; e < edits; ++e) {
    const auto pos = line.empty() ? 0 : static_cast<std::size_t>(integer(rng, 0, line.size() - 1));
    switch (integer(rng, 0, 5)) {
      case 0:
        if (!line.empty()) line[pos] = alphabet[integer(rng, 0, alphabet.size() - 1)];
        break;
      case 1:
        if (!line.empty()) line.erase(pos, 1 + integer(rng, 0, 5));
        break;
      case 2: line.insert(pos, 1, alphabet[integer(rng, 0, alphabet.size() - 1)]); break;
      case 3: line.resize(pos); break;
      case 4: {
        static const char* tokens[] = {"\"v\":2,", "\"extra\":1,", "null", "1e999", "-0", "\"type\":\"nope\"",
                                        "NaN", "[]", "{}", "\"index\":101"};
        line.insert(pos, tokens[integer(rng, 0, 9)]);
        break;
      }
      default: {
        std::string noise;
        for (int i = 0; i < 8; ++i) noise.push_back(static_cast<char>(integer(rng, 0, 255)));
        line.insert(pos, noise);
      }
    }
  }
  return line;
}

// A complete session driven through the engine with a random index trace and,
// now and then, a facilitator threshold override during training. Returns the
// records plus the samples and thresholds the oracle needs.
struct RandomSession {
  nfb::Records records;
  std::vector<double> training_t;
  std::vector<double> training_index;
  std::vector<double> t1;  // active thresholds per training sample
  std::vector<double> t2;
  std::optional<nfb::SessionReportBody> report;
};

inline RandomSession random_session(Rng& rng, int max_training = 400) {
  using namespace nfb;
  SessionConfig cfg;
  cfg.calibration.calibration_duration_s = 20;
  cfg.calibration.min_samples = 10;
  SessionEngine engine(cfg);
  RandomSession out;
  auto add = [&](Records rs) { out.records.insert(out.records.end(), rs.begin(), rs.end()); };
  add(engine.start(0));
  add(engine.begin_calibration(5));
  double t = 5;
  const double centre = real(rng, 10, 90);
  while (engine.phase() == SessionPhase::Calibration) {
    t += 1;
    add(engine.on_sample({t, std::clamp(real(rng, centre - 15, centre + 15), 0.0, 100.0)}));
  }
  const double step_sd = real(rng, 1, 25);
  double x = centre;
  for (int i = 0; i < max_training && engine.phase() == SessionPhase::Training; ++i) {
    t += 1;
    if (integer(rng, 0, 60) == 0) {
      const double a = real(rng, 0, 60);
      const double b = real(rng, a + 1, 100);
      add(engine.request_thresholds(t - 0.5, a, b));
    }
    x = std::clamp(x + std::normal_distribution<double>(0, step_sd)(rng), 0.0, 100.0);
    const double idx = normalize_number(x);
    add(engine.on_sample({t, idx}));
    out.training_t.push_back(t);
    out.training_index.push_back(idx);
    // Overrides take effect on the sample that follows them.
    out.t1.push_back(engine.thresholds()->t1);
    out.t2.push_back(engine.thresholds()->t2);
  }
  if (engine.phase() == SessionPhase::Training) add(engine.stop(t + 0.5, "stopped"));
  out.report = engine.report();
  return out;
}

}  // namespace gen
