#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "nfb/calibration.hpp"
#include "nfb/dsp.hpp"
#include "nfb/feedback.hpp"
#include "nfb/records.hpp"

namespace nfb {

using MusicTempo = PerformanceStage;

struct LayIntervals {
  double low{6.0};
  double medium{4.5};
  double high{3.0};

  double for_stage(PerformanceStage stage) const;
};

struct EngineConfig {
  LayIntervals lay_interval_s{};
  // Median filter length applied to the index before in-game classification;
  // 1 disables it.
  int median_window{3};
  // Lay -> hand-over -> stored; hand-over happens half way.
  double handover_delay_s{2.0};
  double reinforcer_window_s{3.0};
  int egg_goal{60};
  int row_size{5};
  int tray_size{30};
  std::uint64_t palette_seed{1};

  void validate() const;
};

inline constexpr std::array<std::string_view, 6> kEggPalette = {"red", "orange", "yellow", "green", "blue", "purple"};

// Low below t1, Medium in [t1, t2), High from t2 up.
PerformanceStage classify_stage(double index, const Thresholds& th);

struct GameState {
  int eggs_stored{0};
  int eggs_in_flight{0};
  int carts_filled{0};
  double bird_height{0.0};
  double lay_interval_s{0.0};
  MusicTempo music_tempo{MusicTempo::Low};
  Face boy_face{Face::Neutral};
  Face girl_face{Face::Neutral};
  Animation boy_animation{Animation::HeadUpForCatching};
  Animation girl_animation{Animation::TurningBack};
  std::optional<PerformanceStage> stage;  // in-game (filtered) stage
  nlohmann::json character_skins = nlohmann::json::object();

  bool operator==(const GameState&) const = default;
};

struct ReinforcerTriggers {
  bool golden_egg_armed{false};
  bool heart_bubbles{false};
  // High throughout the trailing window, regardless of re-arm state.
  bool sustained_high{false};
};

// Timer-based reinforcers over a trailing window (3 s by default). A trigger
// fires when its predicate first holds and re-arms only after the predicate
// has been false for at least one sample. The window must be covered by
// history (a sample at or before t - window) before anything can fire.
class ReinforcerTracker {
 public:
  explicit ReinforcerTracker(double window_s = 3.0) : window_s_(window_s) {}

  ReinforcerTriggers update(double t, double index, PerformanceStage stage);
  void reset();

 private:
  struct Entry {
    double t;
    double index;
    PerformanceStage stage;
  };
  double window_s_;
  std::deque<Entry> history_;
  bool golden_fired_{false};
  bool hearts_fired_{false};
};

// row_halo + woohoo per multiple of row_size crossed, tray_stars + ohyea per
// multiple of tray_size crossed, victory + stars_awarded on reaching the goal.
std::vector<FeedbackEvent> progress_events(const GameState& before, const GameState& after, const EngineConfig& cfg,
                                           int stars);

// Per-sample stage dwell, switch counts and the index trace of one session.
struct StageAccounting {
  std::int64_t low{0};
  std::int64_t medium{0};
  std::int64_t high{0};
  std::int64_t up_switches{0};
  std::int64_t down_switches{0};
  std::vector<double> indices;
  std::optional<PerformanceStage> last;

  void add(PerformanceStage stage, double index);
  std::int64_t total() const { return low + medium + high; }
  double fraction(PerformanceStage stage) const;
};

int stars_for(const StageAccounting& raw);

// score = round(mean index); stars = 1 + [Medium+High >= 50%] + [High >= 20%].
// Throws Error(NoData) on an empty accounting.
SessionReportBody finalize(const StageAccounting& raw, const StageAccounting& game, const Thresholds& th,
                           double duration_s, int eggs_stored, bool completed, std::string end_reason);

struct StepResult {
  std::vector<FeedbackEvent> events;
  PerformanceStage raw_stage{PerformanceStage::Low};
  PerformanceStage game_stage{PerformanceStage::Low};
  bool completed{false};
};

// The egg-collection game during the Training phase.
class TrainingGame {
 public:
  explicit TrainingGame(EngineConfig cfg, double start_t = 0.0);

  // Throws Error(SessionComplete) once the goal has been reached.
  StepResult step(const AttentionSample& sample, const Thresholds& th);

  // Resume after a pause: timers restart at t and the filters forget history.
  void restart_clock(double t);

  const GameState& state() const { return state_; }
  GameState& mutable_state() { return state_; }
  bool completed() const { return completed_; }
  const StageAccounting& raw_accounting() const { return raw_; }
  const StageAccounting& game_accounting() const { return game_; }
  double start_time() const { return start_t_; }
  double last_time() const { return last_t_; }
  // Stars the session would earn if it ended now.
  int current_stars() const;

 private:
  struct InFlightEgg {
    double laid_t;
    bool handed_over;
  };

  double filtered_index(double index);
  void set_face(Character who, Animation animation, PerformanceStage stage, bool sustained_high,
                std::vector<FeedbackEvent>& out, double t);

  EngineConfig cfg_;
  GameState state_;
  ReinforcerTracker reinforcers_;
  std::mt19937_64 palette_rng_;
  std::deque<double> recent_;
  std::deque<InFlightEgg> in_flight_;
  StageAccounting raw_;
  StageAccounting game_;
  double start_t_;
  double last_t_;
  double lay_progress_{0.0};
  bool golden_pending_{false};
  bool completed_{false};
};

struct SessionConfig {
  CalibrationConfig calibration{};
  EngineConfig engine{};
  std::string session_id{"session"};
  nlohmann::json character_skins = nlohmann::json::object();
};

// One session through Customization -> Calibration -> Training -> Conclusion.
// Single writer: every input returns the records it produced, in order.
class SessionEngine {
 public:
  explicit SessionEngine(SessionConfig cfg);

  Records start(double t);
  Records begin_calibration(double t);
  Records on_sample(const AttentionSample& sample);
  // Facilitator override. Allowed in Customization (applies to the session)
  // and Training (applies from the next sample). Throws Error(Validation) or
  // Error(PhaseRule).
  Records request_thresholds(double t, double t1, double t2);
  Records pause(double t, std::string reason);
  Records resume(double t);
  Records stop(double t, std::string reason = "stopped");

  SessionPhase phase() const { return phase_; }
  bool started() const { return started_; }
  bool paused() const { return paused_; }
  const std::optional<Thresholds>& thresholds() const { return thresholds_; }
  const std::optional<SessionReportBody>& report() const { return report_; }
  const std::vector<AttentionSample>& calibration_samples() const { return calibration_; }
  const TrainingGame* game() const { return game_ ? &*game_ : nullptr; }
  const SessionConfig& config() const { return cfg_; }

  // Current game state in snapshot form (phase, thresholds, state_hash set).
  GameProgressBody snapshot() const;
  std::string state_hash() const;

 private:
  Records finish_calibration(double t);
  Records set_phase(double t, SessionPhase phase);
  GameProgressBody progress_body() const;
  Records conclude(double t, bool completed, std::string reason);

  SessionConfig cfg_;
  SessionPhase phase_{SessionPhase::Customization};
  bool started_{false};
  bool paused_{false};
  double calibration_start_t_{0.0};
  std::vector<AttentionSample> calibration_;
  std::optional<Thresholds> thresholds_;
  std::optional<Thresholds> pending_thresholds_;
  std::optional<double> last_sample_t_;
  std::optional<TrainingGame> game_;
  std::optional<SessionReportBody> report_;
};

}  // namespace nfb
