#include "nfb/engine.hpp"

#include <algorithm>
#include <cmath>

#include "nfb/error.hpp"
#include "nfb/numeric.hpp"
#include "nfb/protocol.hpp"

namespace nfb {

using nlohmann::json;

namespace {

constexpr double kEps = 1e-9;

int stage_rank(PerformanceStage s) { return static_cast<int>(s); }

std::string_view movement_speed(PerformanceStage s) {
  switch (s) {
    case PerformanceStage::Low:
      return "slow";
    case PerformanceStage::Medium:
      return "normal";
    case PerformanceStage::High:
      return "fast";
  }
  return "normal";
}

}  // namespace

double LayIntervals::for_stage(PerformanceStage stage) const {
  switch (stage) {
    case PerformanceStage::Low:
      return low;
    case PerformanceStage::Medium:
      return medium;
    case PerformanceStage::High:
      return high;
  }
  return medium;
}

void EngineConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::Configuration, std::string("engine config: ") + what);
  };
  for (double v : {lay_interval_s.low, lay_interval_s.medium, lay_interval_s.high}) {
    require(std::isfinite(v) && v > 0, "lay intervals must be > 0");
  }
  require(median_window >= 1, "median_window must be >= 1");
  require(std::isfinite(handover_delay_s) && handover_delay_s > 0, "handover_delay_s must be > 0");
  require(std::isfinite(reinforcer_window_s) && reinforcer_window_s > 0, "reinforcer_window_s must be > 0");
  require(egg_goal >= 1 && row_size >= 1 && tray_size >= 1, "egg counts must be >= 1");
}

PerformanceStage classify_stage(double index, const Thresholds& th) {
  if (index < th.t1) return PerformanceStage::Low;
  if (index < th.t2) return PerformanceStage::Medium;
  return PerformanceStage::High;
}

ReinforcerTriggers ReinforcerTracker::update(double t, double index, PerformanceStage stage) {
  history_.push_back({t, index, stage});
  // Keep one sample at or before the window start so coverage can be judged.
  while (history_.size() >= 2 && history_[1].t <= t - window_s_ + kEps) history_.pop_front();

  ReinforcerTriggers out;
  const bool covered = history_.front().t <= t - window_s_ + kEps;
  bool non_decreasing = covered;
  bool all_high = covered;
  if (covered) {
    std::optional<double> prev;
    for (const auto& e : history_) {
      if (e.t < t - window_s_ - kEps) continue;
      if (prev && e.index < *prev) non_decreasing = false;
      if (e.stage != PerformanceStage::High) all_high = false;
      prev = e.index;
    }
  }

  out.sustained_high = all_high;
  if (non_decreasing) {
    out.golden_egg_armed = !golden_fired_;
    golden_fired_ = true;
  } else {
    golden_fired_ = false;
  }
  if (all_high) {
    out.heart_bubbles = !hearts_fired_;
    hearts_fired_ = true;
  } else {
    hearts_fired_ = false;
  }
  return out;
}

void ReinforcerTracker::reset() {
  history_.clear();
  golden_fired_ = false;
  hearts_fired_ = false;
}

std::vector<FeedbackEvent> progress_events(const GameState& before, const GameState& after, const EngineConfig& cfg,
                                           int stars) {
  std::vector<FeedbackEvent> out;
  for (int n = before.eggs_stored + 1; n <= after.eggs_stored; ++n) {
    if (n % cfg.row_size == 0) {
      out.push_back(make_event(FeedbackKind::RowHalo, {{"eggs", n}}));
      out.push_back(make_event(FeedbackKind::Woohoo, {{"eggs", n}}));
    }
    if (n % cfg.tray_size == 0) {
      out.push_back(make_event(FeedbackKind::TrayStars, {{"eggs", n}}));
      out.push_back(make_event(FeedbackKind::OhYea, {{"eggs", n}}));
    }
    if (n == cfg.egg_goal) {
      out.push_back(make_event(FeedbackKind::Victory, json::object()));
      out.push_back(make_event(FeedbackKind::StarsAwarded, {{"stars", stars}}));
    }
  }
  return out;
}

void StageAccounting::add(PerformanceStage stage, double index) {
  switch (stage) {
    case PerformanceStage::Low:
      ++low;
      break;
    case PerformanceStage::Medium:
      ++medium;
      break;
    case PerformanceStage::High:
      ++high;
      break;
  }
  if (last && *last != stage) {
    if (stage_rank(stage) > stage_rank(*last)) {
      ++up_switches;
    } else {
      ++down_switches;
    }
  }
  last = stage;
  indices.push_back(index);
}

double StageAccounting::fraction(PerformanceStage stage) const {
  const auto n = total();
  if (n == 0) return 0.0;
  std::int64_t k = 0;
  switch (stage) {
    case PerformanceStage::Low:
      k = low;
      break;
    case PerformanceStage::Medium:
      k = medium;
      break;
    case PerformanceStage::High:
      k = high;
      break;
  }
  return static_cast<double>(k) / static_cast<double>(n);
}

int stars_for(const StageAccounting& raw) {
  if (raw.total() == 0) return 1;
  // Integer forms of fraction(Medium + High) >= 0.5 and fraction(High) >= 0.2.
  const int engaged = 2 * (raw.medium + raw.high) >= raw.total() ? 1 : 0;
  const int excelled = 5 * raw.high >= raw.total() ? 1 : 0;
  return 1 + engaged + excelled;
}

SessionReportBody finalize(const StageAccounting& raw, const StageAccounting& game, const Thresholds& th,
                           double duration_s, int eggs_stored, bool completed, std::string end_reason) {
  if (raw.total() == 0) throw Error(ErrorCode::NoData, "finalize: no training samples");
  SessionReportBody r;
  r.mean_index = mean(raw.indices);
  r.sd_index = sample_sd(raw.indices);
  r.score = std::clamp<std::int64_t>(std::llround(r.mean_index), 0, 100);
  r.pct_low = raw.fraction(PerformanceStage::Low);
  r.pct_medium = raw.fraction(PerformanceStage::Medium);
  r.pct_high = raw.fraction(PerformanceStage::High);
  r.stars = stars_for(raw);
  r.up_switches = raw.up_switches;
  r.down_switches = raw.down_switches;
  r.game_up_switches = game.up_switches;
  r.game_down_switches = game.down_switches;
  r.duration_s = duration_s;
  r.eggs_stored = eggs_stored;
  r.t1 = th.t1;
  r.t2 = th.t2;
  r.completed = completed;
  r.end_reason = std::move(end_reason);
  return r;
}

TrainingGame::TrainingGame(EngineConfig cfg, double start_t)
    : cfg_(cfg), reinforcers_(cfg.reinforcer_window_s), palette_rng_(cfg.palette_seed), start_t_(start_t),
      last_t_(start_t) {
  cfg_.validate();
  state_.boy_face = Face::Expecting;
}

void TrainingGame::restart_clock(double t) {
  last_t_ = t;
  recent_.clear();
  reinforcers_.reset();
}

double TrainingGame::filtered_index(double index) {
  recent_.push_back(index);
  while (recent_.size() > static_cast<std::size_t>(cfg_.median_window)) recent_.pop_front();
  std::vector<double> sorted(recent_.begin(), recent_.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  if (n % 2 == 1) return sorted[n / 2];
  return normalize_number(0.5 * (sorted[n / 2 - 1] + sorted[n / 2]));
}

int TrainingGame::current_stars() const { return stars_for(raw_); }

void TrainingGame::set_face(Character who, Animation animation, PerformanceStage stage, bool sustained_high,
                            std::vector<FeedbackEvent>& out, double) {
  const Face face = *face_for(who, animation, stage, sustained_high);
  Face& current = who == Character::Boy ? state_.boy_face : state_.girl_face;
  Animation& current_animation = who == Character::Boy ? state_.boy_animation : state_.girl_animation;
  current_animation = animation;
  if (face == current) return;
  current = face;
  out.push_back(make_event(FeedbackKind::FacialExpression, {{"character", to_string(who)},
                                                            {"animation", to_string(animation)},
                                                            {"face", to_string(face)}}));
}

StepResult TrainingGame::step(const AttentionSample& sample, const Thresholds& th) {
  if (completed_) throw Error(ErrorCode::SessionComplete, "step: session already complete");
  if (!std::isfinite(sample.index) || sample.index < 0 || sample.index > 100) {
    throw Error(ErrorCode::Validation, "step: index outside [0,100]");
  }
  const double t = sample.t;
  const double dt = std::max(0.0, t - last_t_);
  last_t_ = std::max(last_t_, t);

  StepResult result;
  auto& events = result.events;

  result.raw_stage = classify_stage(sample.index, th);
  raw_.add(result.raw_stage, sample.index);
  const double smoothed = filtered_index(sample.index);
  result.game_stage = classify_stage(smoothed, th);
  game_.add(result.game_stage, smoothed);

  // Immediate
  state_.bird_height = normalize_number(sample.index / 100.0);
  events.push_back(make_event(FeedbackKind::BirdHeight, {{"height", state_.bird_height}}));

  // Storytelling on stage change
  const auto previous = state_.stage;
  if (!previous || *previous != result.game_stage) {
    const std::string from = previous ? std::string(to_string(*previous)) : std::string("none");
    const std::string to(to_string(result.game_stage));
    state_.stage = result.game_stage;
    state_.lay_interval_s = cfg_.lay_interval_s.for_stage(result.game_stage);
    state_.music_tempo = result.game_stage;
    events.push_back(make_event(FeedbackKind::MovementSpeed,
                                {{"speed", movement_speed(result.game_stage)}, {"from", from}, {"to", to}}));
    events.push_back(make_event(FeedbackKind::LayRate,
                                {{"interval_s", state_.lay_interval_s}, {"from", from}, {"to", to}}));
    events.push_back(make_event(FeedbackKind::MusicTempo,
                                {{"tempo", to_string(state_.music_tempo)}, {"from", from}, {"to", to}}));
  }

  const auto triggers = reinforcers_.update(t, smoothed, result.game_stage);
  if (triggers.heart_bubbles) events.push_back(make_event(FeedbackKind::HeartBubbles, json::object()));
  if (triggers.golden_egg_armed) golden_pending_ = true;

  // Eggs already in the hand-over pipeline.
  const GameState before = state_;
  bool stored_now = false;
  bool handed_now = false;
  const double handover_at = cfg_.handover_delay_s / 2.0;
  while (!in_flight_.empty()) {
    auto& egg = in_flight_.front();
    const double elapsed = t - egg.laid_t;
    if (!egg.handed_over && elapsed + kEps >= handover_at) {
      egg.handed_over = true;
      handed_now = true;
      events.push_back(make_event(FeedbackKind::Bubbles, json::object()));
      events.push_back(make_event(FeedbackKind::BubbleSound, json::object()));
      events.push_back(make_event(FeedbackKind::Emoji, json::object()));
      events.push_back(make_event(FeedbackKind::CoinSound, json::object()));
    }
    if (elapsed + kEps < cfg_.handover_delay_s) break;
    in_flight_.pop_front();
    ++state_.eggs_stored;
    stored_now = true;
    events.push_back(make_event(FeedbackKind::EggStored, {{"eggs", state_.eggs_stored}}));
  }
  // Later eggs can be handed over in the same step.
  for (auto& egg : in_flight_) {
    if (!egg.handed_over && t - egg.laid_t + kEps >= handover_at) {
      egg.handed_over = true;
      handed_now = true;
      events.push_back(make_event(FeedbackKind::Bubbles, json::object()));
      events.push_back(make_event(FeedbackKind::BubbleSound, json::object()));
      events.push_back(make_event(FeedbackKind::Emoji, json::object()));
      events.push_back(make_event(FeedbackKind::CoinSound, json::object()));
    }
  }
  state_.carts_filled = state_.eggs_stored / cfg_.tray_size;
  if (state_.eggs_stored >= cfg_.egg_goal) completed_ = true;
  for (auto& e : progress_events(before, state_, cfg_, current_stars())) events.push_back(std::move(e));

  // Laying
  bool laid_now = false;
  const int goal_remaining = cfg_.egg_goal - state_.eggs_stored - static_cast<int>(in_flight_.size());
  if (!completed_ && goal_remaining > 0) {
    lay_progress_ += dt / cfg_.lay_interval_s.for_stage(result.game_stage);
    int remaining = goal_remaining;
    while (lay_progress_ + kEps >= 1.0 && remaining > 0) {
      lay_progress_ = std::max(0.0, lay_progress_ - 1.0);
      --remaining;
      laid_now = true;
      in_flight_.push_back({t, false});
      if (golden_pending_) {
        golden_pending_ = false;
        events.push_back(make_event(FeedbackKind::GoldenEgg, {{"egg", state_.eggs_stored + in_flight_.size()}}));
      } else {
        std::uniform_int_distribution<std::size_t> pick(0, kEggPalette.size() - 1);
        events.push_back(make_event(
            FeedbackKind::ColoredEgg,
            {{"egg", state_.eggs_stored + in_flight_.size()}, {"color", kEggPalette[pick(palette_rng_)]}}));
      }
    }
  }
  state_.eggs_in_flight = static_cast<int>(in_flight_.size());

  // Character animations follow the most recent pipeline transition.
  Animation boy = Animation::HeadUpForCatching;
  Animation girl = Animation::TurningBack;
  if (stored_now) {
    boy = Animation::TurningBack;
    girl = Animation::PuttingDownEggs;
  } else if (handed_now) {
    boy = Animation::HandingOverEggs;
    girl = Animation::ReceivingEggs;
  } else if (laid_now) {
    boy = Animation::CatchingEggs;
  } else if (!in_flight_.empty()) {
    boy = Animation::TurningWithEggs;
    girl = in_flight_.front().handed_over ? Animation::TurningWithEggs : Animation::TurningBack;
  }
  set_face(Character::Boy, boy, result.game_stage, triggers.sustained_high, events, t);
  set_face(Character::Girl, girl, result.game_stage, triggers.sustained_high, events, t);

  result.completed = completed_;
  return result;
}

SessionEngine::SessionEngine(SessionConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.calibration.validate();
  cfg_.engine.validate();
}

Records SessionEngine::start(double t) {
  if (started_) throw Error(ErrorCode::PhaseRule, "session already started");
  started_ = true;
  phase_ = SessionPhase::Customization;
  SessionControlBody body;
  body.action = ControlAction::Start;
  body.phase = phase_;
  body.session_id = cfg_.session_id;
  body.character_skins = cfg_.character_skins;
  return {Record{t, body}};
}

Records SessionEngine::set_phase(double t, SessionPhase phase) {
  phase_ = phase;
  SessionControlBody body;
  body.action = ControlAction::Phase;
  body.phase = phase;
  return {Record{t, body}};
}

Records SessionEngine::begin_calibration(double t) {
  if (!started_ || phase_ != SessionPhase::Customization) {
    throw Error(ErrorCode::PhaseRule, "calibration can only begin from the customization phase");
  }
  calibration_start_t_ = t;
  Records out = set_phase(t, SessionPhase::Calibration);
  out.push_back(Record{t, CalibrateBeginBody{cfg_.calibration.calibration_duration_s}});
  return out;
}

Records SessionEngine::finish_calibration(double t) {
  Records out;
  const double b = normalize_number(compute_baseline(calibration_, cfg_.calibration));
  Thresholds th = compute_thresholds(b, cfg_.calibration);
  if (thresholds_ && thresholds_->source == ThresholdSource::Manual) {
    th = *thresholds_;
    th.baseline = b;
  }
  thresholds_ = th;
  out.push_back(Record{t, CalibrateResultBody{th.baseline, th.t1, th.t2, std::string(to_string(th.source)),
                                              static_cast<std::int64_t>(calibration_.size())}});
  auto phase = set_phase(t, SessionPhase::Training);
  out.insert(out.end(), phase.begin(), phase.end());
  game_.emplace(cfg_.engine, t);
  game_->mutable_state().character_skins = cfg_.character_skins;
  return out;
}

Records SessionEngine::on_sample(const AttentionSample& in) {
  if (phase_ == SessionPhase::Conclusion) {
    throw Error(ErrorCode::SessionComplete, "session already complete");
  }
  if (!std::isfinite(in.t) || !std::isfinite(in.index) || in.index < 0 || in.index > 100) {
    throw Error(ErrorCode::Validation, "attention sample outside [0,100] or non-finite");
  }
  if (!started_ || paused_) return {};
  if (last_sample_t_ && in.t < *last_sample_t_) {
    throw Error(ErrorCode::Validation, "attention samples must be time ordered");
  }
  last_sample_t_ = in.t;
  const AttentionSample s{normalize_number(in.t), normalize_number(in.index)};

  Records out;
  switch (phase_) {
    case SessionPhase::Customization:
      out.push_back(Record{s.t, AttentionSampleBody{s.index}});
      return out;
    case SessionPhase::Calibration: {
      if (s.t <= calibration_start_t_) {
        out.push_back(Record{s.t, AttentionSampleBody{s.index}});
        return out;
      }
      calibration_.push_back(s);
      out.push_back(Record{s.t, AttentionSampleBody{s.index}});
      const bool elapsed = s.t + kEps >= calibration_start_t_ + cfg_.calibration.calibration_duration_s;
      if (elapsed && calibration_.size() >= static_cast<std::size_t>(cfg_.calibration.min_samples)) {
        auto done = finish_calibration(s.t);
        out.insert(out.end(), done.begin(), done.end());
      }
      return out;
    }
    case SessionPhase::Training:
      break;
    case SessionPhase::Conclusion:
      return out;
  }

  if (pending_thresholds_) {
    thresholds_ = *pending_thresholds_;
    pending_thresholds_.reset();
    out.push_back(Record{s.t, ThresholdSetBody{thresholds_->t1, thresholds_->t2,
                                               std::string(to_string(thresholds_->source))}});
  }
  out.push_back(Record{s.t, AttentionSampleBody{s.index}});
  auto step = game_->step(s, *thresholds_);
  for (auto& e : step.events) out.push_back(Record{s.t, std::move(e)});
  out.push_back(Record{s.t, progress_body()});
  if (step.completed) {
    auto done = conclude(s.t, true, "completed");
    out.insert(out.end(), done.begin(), done.end());
  }
  return out;
}

Records SessionEngine::request_thresholds(double t, double t1, double t2) {
  Thresholds th = set_manual_thresholds(t1, t2);
  switch (phase_) {
    case SessionPhase::Customization:
      thresholds_ = th;
      return {Record{t, ThresholdSetBody{th.t1, th.t2, std::string("manual")}}};
    case SessionPhase::Training:
      th.baseline = thresholds_ ? thresholds_->baseline : 0.0;
      pending_thresholds_ = th;
      return {};
    case SessionPhase::Calibration:
      throw Error(ErrorCode::PhaseRule, "thresholds cannot be changed during calibration");
    case SessionPhase::Conclusion:
      throw Error(ErrorCode::PhaseRule, "session already concluded");
  }
  return {};
}

Records SessionEngine::pause(double t, std::string reason) {
  if (!started_ || phase_ == SessionPhase::Conclusion) {
    throw Error(ErrorCode::PhaseRule, "no running session to pause");
  }
  if (paused_) return {};
  paused_ = true;
  SessionControlBody body;
  body.action = ControlAction::Pause;
  body.phase = phase_;
  body.paused = true;
  body.reason = std::move(reason);
  return {Record{t, body}};
}

Records SessionEngine::resume(double t) {
  if (!paused_) throw Error(ErrorCode::PhaseRule, "session is not paused");
  paused_ = false;
  if (game_) game_->restart_clock(t);
  last_sample_t_ = t;
  SessionControlBody body;
  body.action = ControlAction::Resume;
  body.phase = phase_;
  body.paused = false;
  return {Record{t, body}};
}

Records SessionEngine::stop(double t, std::string reason) {
  if (!started_ || phase_ == SessionPhase::Conclusion) {
    throw Error(ErrorCode::PhaseRule, "no running session to stop");
  }
  paused_ = false;
  return conclude(t, false, std::move(reason));
}

Records SessionEngine::conclude(double t, bool completed, std::string reason) {
  Records out;
  if (game_ && game_->raw_accounting().total() > 0) {
    const double duration = normalize_number(game_->last_time() - game_->start_time());
    report_ = finalize(game_->raw_accounting(), game_->game_accounting(), *thresholds_, duration,
                       game_->state().eggs_stored, completed, reason);
    auto phase = set_phase(t, SessionPhase::Conclusion);
    out.insert(out.end(), phase.begin(), phase.end());
    out.push_back(Record{t, *report_});
  } else {
    auto phase = set_phase(t, SessionPhase::Conclusion);
    out.insert(out.end(), phase.begin(), phase.end());
    out.push_back(Record{t, ErrorBody{std::string(to_string(ErrorCode::NoData)),
                                      "session ended before any training sample (" + reason + ")", std::nullopt}});
  }
  return out;
}

GameProgressBody SessionEngine::progress_body() const {
  GameProgressBody b;
  if (!game_) return b;
  const auto& s = game_->state();
  b.stage = s.stage.value_or(PerformanceStage::Low);
  b.eggs_stored = s.eggs_stored;
  b.eggs_in_flight = s.eggs_in_flight;
  b.carts_filled = s.carts_filled;
  b.bird_height = s.bird_height;
  b.lay_interval_s = s.lay_interval_s;
  b.music_tempo = s.music_tempo;
  b.boy_face = s.boy_face;
  b.girl_face = s.girl_face;
  return b;
}

GameProgressBody SessionEngine::snapshot() const {
  GameProgressBody b = progress_body();
  b.phase = phase_;
  if (thresholds_) {
    b.t1 = thresholds_->t1;
    b.t2 = thresholds_->t2;
  }
  b.state_hash = snapshot_hash(b);
  return b;
}

std::string SessionEngine::state_hash() const { return *snapshot().state_hash; }

}  // namespace nfb
