#include "nfb/runner.hpp"

#include <cstdio>

#include "nfb/pipeline.hpp"
#include "nfb/session_log.hpp"
#include "nfb/simulator.hpp"

namespace nfb {

bool is_reinforcing(FeedbackKind kind) {
  switch (kind) {
    case FeedbackKind::GoldenEgg:
    case FeedbackKind::HeartBubbles:
    case FeedbackKind::Woohoo:
    case FeedbackKind::OhYea:
      return true;
    default:
      return false;
  }
}

RunResult run_simulated(const RunConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  RunResult result;
  SessionPipeline pipeline(cfg.pipeline);
  EegSimulator sim(cfg.profile, cfg.pipeline.dsp, cfg.simulator);

  SessionLogWriter writer;
  if (!opts.out_dir.empty()) {
    std::filesystem::create_directories(opts.out_dir);
    writer = SessionLogWriter(opts.out_dir / log_file_name(cfg.pipeline.session.session_id, opts.when));
    result.log_path = writer.path();
  }

  auto emit = [&](Records records) {
    for (auto& r : records) {
      if (writer.is_open()) writer.write(r);
      if (cfg.profile.feedback_coupling > 0) {
        if (const auto* e = std::get_if<FeedbackEvent>(&r.body); e && is_reinforcing(e->kind)) sim.reinforce(r.t);
      }
      result.records.push_back(std::move(r));
    }
  };

  emit(pipeline.start(0.0));
  if (cfg.manual_thresholds) {
    emit(pipeline.request_thresholds(0.0, cfg.manual_thresholds->first, cfg.manual_thresholds->second));
  }

  const double hop = cfg.pipeline.dsp.hop_s;
  while (pipeline.engine().phase() != SessionPhase::Conclusion) {
    const EegFrame frame = sim.next_frame();
    emit(pipeline.on_frame(frame));
    const double frame_end = frame.t + hop;
    result.session_time_s = frame_end;
    if (pipeline.engine().phase() != SessionPhase::Conclusion && frame_end + 1e-9 >= cfg.duration_cap_s) {
      emit(pipeline.stop(frame_end, "timeout"));
      result.timed_out = true;
    }
  }
  writer.close();
  result.report = pipeline.engine().report();
  result.completed = result.report && result.report->completed;
  return result;
}

std::string format_summary(const SessionReportBody& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "score %lld  stars %lld  eggs %lld  duration %.9g s  %s (%s)\n"
                "thresholds [%.9g, %.9g]  low %.9g  medium %.9g  high %.9g\n"
                "switches up %lld down %lld (in-game up %lld down %lld)  index mean %.9g sd %.9g\n",
                static_cast<long long>(r.score), static_cast<long long>(r.stars),
                static_cast<long long>(r.eggs_stored), r.duration_s, r.completed ? "completed" : "not completed",
                r.end_reason.c_str(), r.t1, r.t2, r.pct_low, r.pct_medium, r.pct_high,
                static_cast<long long>(r.up_switches), static_cast<long long>(r.down_switches),
                static_cast<long long>(r.game_up_switches), static_cast<long long>(r.game_down_switches),
                r.mean_index, r.sd_index);
  return buf;
}

}  // namespace nfb
