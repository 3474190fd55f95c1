#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "nfb/calibration.hpp"
#include "nfb/dsp.hpp"
#include "nfb/engine.hpp"
#include "nfb/session_log.hpp"

namespace nfb {

// Centered moving average over `window` samples with truncated edges. An even
// window is the symmetric 2xN form (half weight on the two outermost taps), so
// linear trends pass through unchanged. Throws Error(NoData) on empty input.
std::vector<double> moving_average(std::span<const double> values, int window = 10);
// Same over a 1 Hz (or any uniform) trace; the window is given in seconds.
std::vector<AttentionSample> moving_average(std::span<const AttentionSample> trace, double window_s = 10.0);

enum class StageSource { Raw, Smoothed };

struct TrainingPoint {
  double t{0.0};
  double index{0.0};
  Thresholds thresholds{};
  std::optional<PerformanceStage> game_stage;  // from the logged in-game stream
};

// Training-phase samples with the thresholds active at each; throws
// CorruptLogError when a training sample precedes any threshold record.
struct TrainingTrace {
  std::string name;
  std::optional<double> start_t;
  std::vector<TrainingPoint> points;
  std::vector<AttentionSample> calibration;
  bool completed{false};
};

TrainingTrace extract_training(const SessionLog& log);

struct SessionMetrics {
  std::string session;
  double t1{0.0};
  double t2{0.0};
  double pct_low{0.0};
  double pct_medium{0.0};
  double pct_high{0.0};
  std::int64_t up_switches{0};
  std::int64_t down_switches{0};
  // Switches of the median-filtered in-game stage stream.
  std::int64_t game_up_switches{0};
  std::int64_t game_down_switches{0};
  double mean_index{0.0};
  double sd_index{0.0};
  double duration_s{0.0};
  bool completed{false};
  std::int64_t samples{0};
};

// Throws Error(NoData) when the log has no training samples.
SessionMetrics compute_metrics(const SessionLog& log, StageSource source = StageSource::Raw);

// The session report recomputed from the log alone.
SessionReportBody finalize_log(const SessionLog& log);

enum class Trend { Up, Down, Flat };

struct MultiSessionReport {
  std::vector<SessionMetrics> sessions;
  std::vector<int> groups;     // sessions per group, in order
  std::optional<double> slope;  // least squares of mean_index on session order
  std::optional<Trend> trend;
};

// groups empty: 2/3/3 for eight sessions, otherwise one group.
MultiSessionReport multi_session_report(std::vector<SessionMetrics> metrics, std::vector<int> groups = {});

std::string format_table(const MultiSessionReport& report);
std::string format_csv(const MultiSessionReport& report);
nlohmann::json format_json(const MultiSessionReport& report, std::span<const SessionLog> logs);

std::string_view to_string(Trend t);

}  // namespace nfb
