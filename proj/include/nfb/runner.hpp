#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>

#include "nfb/config.hpp"
#include "nfb/records.hpp"

namespace nfb {

struct RunOptions {
  // Directory for the session log; empty keeps the log in memory only.
  std::filesystem::path out_dir;
  std::chrono::system_clock::time_point when{std::chrono::system_clock::now()};
};

struct RunResult {
  Records records;
  std::optional<SessionReportBody> report;
  std::optional<std::filesystem::path> log_path;
  bool completed{false};
  bool timed_out{false};
  double session_time_s{0.0};
};

// Simulated headband -> DSP -> engine in one thread, as fast as the CPU
// allows. Stops with end_reason "timeout" once session time reaches the
// configured cap.
RunResult run_simulated(const RunConfig& cfg, const RunOptions& opts = {});

// Human-readable report lines shared by `run` and `report`.
std::string format_summary(const SessionReportBody& r);

// Feedback kinds that count as positive reinforcement for the simulator's
// feedback coupling.
bool is_reinforcing(FeedbackKind kind);

}  // namespace nfb
