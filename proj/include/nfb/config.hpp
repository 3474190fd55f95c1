#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>

#include <json.hpp>

#include "nfb/pipeline.hpp"
#include "nfb/simulator.hpp"

namespace nfb {

// Scripted latent-attention profiles: rest during customization, a steady
// level during calibration, then a training level. "ou" is a mean-reverting
// random walk. Throws Error(Configuration) for unknown names.
AttentionProfile builtin_profile(const std::string& name, std::uint64_t seed = 1);

// Everything a run or a server needs, loaded from one JSON document. Unknown
// keys anywhere in the tree are rejected; missing keys keep their defaults.
struct RunConfig {
  std::string profile_name{"medium"};
  AttentionProfile profile = builtin_profile("medium");
  SimulatorConfig simulator{};
  PipelineConfig pipeline{};
  // Facilitator-designated thresholds applied before calibration.
  std::optional<std::pair<double, double>> manual_thresholds;
  // Session time (from start) after which a run is stopped with exit 3.
  double duration_cap_s{1800.0};
  std::string listen{"127.0.0.1:7878"};
  std::string ws_listen{"127.0.0.1:7879"};
  std::string out_dir;
  DeviceMode device{DeviceMode::Simulator};
  // Backend tuning.
  double reorder_window_s{2.0};
  std::size_t observer_queue{1024};
  // Raw EEG forwarded to observers is decimated to at most this rate.
  double observer_eeg_rate_hz{32.0};
  bool auto_start{true};

  // Throws Error(Configuration).
  void validate() const;
  // Re-seeds the profile and derives the session id and egg palette seed.
  void set_seed(std::uint64_t seed);
  std::uint64_t seed() const { return profile.seed; }
};

RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json run_config_to_json(const RunConfig& cfg);

std::string_view to_string(DeviceMode m);
std::optional<DeviceMode> parse_device_mode(std::string_view s);

}  // namespace nfb
