#include "nfb/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "nfb/error.hpp"
#include "nfb/numeric.hpp"

namespace nfb {

using nlohmann::json;

std::vector<double> moving_average(std::span<const double> values, int window) {
  if (values.empty()) throw Error(ErrorCode::NoData, "moving_average: empty trace");
  if (window < 1) throw Error(ErrorCode::Configuration, "moving_average: window must be >= 1");
  const auto n = static_cast<std::ptrdiff_t>(values.size());
  const std::ptrdiff_t half = window / 2;
  const bool even = window % 2 == 0;
  std::vector<double> out(values.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double sum = 0.0;
    double weight = 0.0;
    for (std::ptrdiff_t k = -half; k <= half; ++k) {
      const std::ptrdiff_t j = i + k;
      if (j < 0 || j >= n) continue;
      const double w = even && (k == -half || k == half) ? 0.5 : 1.0;
      sum += w * values[static_cast<std::size_t>(j)];
      weight += w;
    }
    out[static_cast<std::size_t>(i)] = sum / weight;
  }
  return out;
}

std::vector<AttentionSample> moving_average(std::span<const AttentionSample> trace, double window_s) {
  if (trace.empty()) throw Error(ErrorCode::NoData, "moving_average: empty trace");
  double step = 1.0;
  if (trace.size() >= 2) step = (trace.back().t - trace.front().t) / static_cast<double>(trace.size() - 1);
  if (!(step > 0)) step = 1.0;
  const int window = std::max(1, static_cast<int>(std::lround(window_s / step)));
  std::vector<double> values;
  values.reserve(trace.size());
  for (const auto& s : trace) values.push_back(s.index);
  const auto smoothed = moving_average(values, window);
  std::vector<AttentionSample> out(trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) out[i] = {trace[i].t, smoothed[i]};
  return out;
}

TrainingTrace extract_training(const SessionLog& log) {
  TrainingTrace trace;
  trace.name = log.name;
  std::optional<Thresholds> active;
  std::optional<double> baseline;
  SessionPhase phase = SessionPhase::Customization;
  std::vector<std::size_t> orphan_lines;

  for (std::size_t i = 0; i < log.messages.size(); ++i) {
    const auto& m = log.messages[i];
    std::visit(
        [&](const auto& b) {
          using T = std::decay_t<decltype(b)>;
          if constexpr (std::is_same_v<T, SessionControlBody>) {
            if (b.phase && (b.action == ControlAction::Phase || b.action == ControlAction::Start)) {
              phase = *b.phase;
              if (phase == SessionPhase::Training && !trace.start_t) trace.start_t = m.t;
            }
          } else if constexpr (std::is_same_v<T, CalibrateResultBody>) {
            baseline = b.baseline;
            active = Thresholds{b.baseline, b.t1, b.t2,
                                b.source == "manual" ? ThresholdSource::Manual : ThresholdSource::Adaptive};
          } else if constexpr (std::is_same_v<T, ThresholdSetBody>) {
            active = Thresholds{baseline.value_or(0.0), b.t1, b.t2,
                                b.source && *b.source == "adaptive" ? ThresholdSource::Adaptive
                                                                    : ThresholdSource::Manual};
          } else if constexpr (std::is_same_v<T, AttentionSampleBody>) {
            if (phase == SessionPhase::Calibration) {
              trace.calibration.push_back({m.t, b.index});
            } else if (phase == SessionPhase::Training) {
              if (!active) {
                orphan_lines.push_back(i + 1);
                return;
              }
              trace.points.push_back({m.t, b.index, *active, std::nullopt});
            }
          } else if constexpr (std::is_same_v<T, GameProgressBody>) {
            if (phase == SessionPhase::Training && !b.phase && !trace.points.empty()) {
              trace.points.back().game_stage = b.stage;
            }
          } else if constexpr (std::is_same_v<T, FeedbackEvent>) {
            if (b.kind == FeedbackKind::Victory) trace.completed = true;
          }
        },
        m.body);
  }
  if (!orphan_lines.empty()) {
    throw CorruptLogError(log.name, std::move(orphan_lines), "training sample without an active threshold record");
  }
  return trace;
}

namespace {

struct Scan {
  StageAccounting raw;
  StageAccounting game;
};

Scan scan(const TrainingTrace& trace, StageSource source) {
  Scan s;
  std::vector<double> values;
  values.reserve(trace.points.size());
  for (const auto& p : trace.points) values.push_back(p.index);
  std::vector<double> classify_on = values;
  if (source == StageSource::Smoothed && !values.empty()) classify_on = moving_average(values, 10);
  for (std::size_t i = 0; i < trace.points.size(); ++i) {
    const auto& p = trace.points[i];
    s.raw.add(classify_stage(classify_on[i], p.thresholds), p.index);
    if (p.game_stage) s.game.add(*p.game_stage, p.index);
  }
  return s;
}

double duration_of(const TrainingTrace& trace) {
  if (trace.points.empty()) return 0.0;
  const double start = trace.start_t.value_or(trace.points.front().t);
  return normalize_number(trace.points.back().t - start);
}

}  // namespace

SessionMetrics compute_metrics(const SessionLog& log, StageSource source) {
  const auto trace = extract_training(log);
  if (trace.points.empty()) throw Error(ErrorCode::NoData, log.name + ": no training samples");
  const auto s = scan(trace, source);
  SessionMetrics m;
  m.session = log.name;
  m.t1 = trace.points.back().thresholds.t1;
  m.t2 = trace.points.back().thresholds.t2;
  m.pct_low = s.raw.fraction(PerformanceStage::Low);
  m.pct_medium = s.raw.fraction(PerformanceStage::Medium);
  m.pct_high = s.raw.fraction(PerformanceStage::High);
  m.up_switches = s.raw.up_switches;
  m.down_switches = s.raw.down_switches;
  m.game_up_switches = s.game.up_switches;
  m.game_down_switches = s.game.down_switches;
  m.mean_index = mean(s.raw.indices);
  m.sd_index = sample_sd(s.raw.indices);
  m.duration_s = duration_of(trace);
  m.completed = trace.completed;
  m.samples = s.raw.total();
  return m;
}

SessionReportBody finalize_log(const SessionLog& log) {
  const auto trace = extract_training(log);
  if (trace.points.empty()) throw Error(ErrorCode::NoData, log.name + ": no training samples");
  const auto s = scan(trace, StageSource::Raw);
  int eggs = 0;
  std::string reason = trace.completed ? "completed" : "stopped";
  for (const auto& m : log.messages) {
    if (const auto* e = std::get_if<FeedbackEvent>(&m.body); e && e->kind == FeedbackKind::EggStored) ++eggs;
    if (const auto* r = std::get_if<SessionReportBody>(&m.body)) reason = r->end_reason;
  }
  return finalize(s.raw, s.game, trace.points.back().thresholds, duration_of(trace), eggs, trace.completed, reason);
}

std::string_view to_string(Trend t) {
  switch (t) {
    case Trend::Up:
      return "up";
    case Trend::Down:
      return "down";
    case Trend::Flat:
      return "flat";
  }
  return "flat";
}

MultiSessionReport multi_session_report(std::vector<SessionMetrics> metrics, std::vector<int> groups) {
  MultiSessionReport r;
  r.sessions = std::move(metrics);
  const int n = static_cast<int>(r.sessions.size());
  if (groups.empty()) {
    groups = n == 8 ? std::vector<int>{2, 3, 3} : std::vector<int>{n};
  }
  if (std::accumulate(groups.begin(), groups.end(), 0) != n ||
      std::any_of(groups.begin(), groups.end(), [](int g) { return g < 1; })) {
    throw Error(ErrorCode::Configuration, "session groups must be positive and sum to the session count");
  }
  r.groups = std::move(groups);

  if (n >= 2) {
    const double xbar = (n - 1) / 2.0;
    double ybar = 0.0;
    for (const auto& s : r.sessions) ybar += s.mean_index;
    ybar /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (int i = 0; i < n; ++i) {
      sxy += (i - xbar) * (r.sessions[static_cast<std::size_t>(i)].mean_index - ybar);
      sxx += (i - xbar) * (i - xbar);
    }
    r.slope = sxy / sxx;
    const double scale = std::max(1.0, std::abs(ybar));
    if (std::abs(*r.slope) <= 1e-12 * scale) {
      r.slope = 0.0;
      r.trend = Trend::Flat;
    } else {
      r.trend = *r.slope > 0 ? Trend::Up : Trend::Down;
    }
  }
  return r;
}

namespace {

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

}  // namespace

std::string format_table(const MultiSessionReport& report) {
  constexpr std::size_t kLabel = 20;
  constexpr std::size_t kCol = 12;
  std::string out;

  std::string header = std::string(kLabel, ' ');
  int first = 1;
  for (std::size_t g = 0; g < report.groups.size(); ++g) {
    const int last = first + report.groups[g] - 1;
    std::string title = "Week " + std::to_string(g + 1) + " (S" + std::to_string(first) +
                        (last > first ? "-" + std::to_string(last) : std::string()) + ")";
    const std::size_t width = kCol * static_cast<std::size_t>(report.groups[g]);
    if (title.size() < width) title += std::string(width - title.size(), ' ');
    header += " | " + title;
    first = last + 1;
  }
  out += header + "\n";

  auto row = [&](const std::string& label, auto cell) {
    std::string line = label + std::string(kLabel > label.size() ? kLabel - label.size() : 0, ' ');
    std::size_t i = 0;
    for (std::size_t g = 0; g < report.groups.size(); ++g) {
      line += " | ";
      for (int k = 0; k < report.groups[g]; ++k, ++i) line += pad(cell(report.sessions[i]), kCol);
    }
    out += line + "\n";
  };

  row("Session", [&](const SessionMetrics& m) {
    const auto idx = static_cast<std::size_t>(&m - report.sessions.data()) + 1;
    return "S" + std::to_string(idx);
  });
  row("Thresholds [t1,t2]",
      [](const SessionMetrics& m) { return "[" + fmt("%.0f", m.t1) + ", " + fmt("%.0f", m.t2) + "]"; });
  row("Low (% time)", [](const SessionMetrics& m) { return fmt("%.0f%%", 100 * m.pct_low); });
  row("Medium (% time)", [](const SessionMetrics& m) { return fmt("%.0f%%", 100 * m.pct_medium); });
  row("High (% time)", [](const SessionMetrics& m) { return fmt("%.0f%%", 100 * m.pct_high); });
  row("Up switches", [](const SessionMetrics& m) { return std::to_string(m.up_switches); });
  row("Down switches", [](const SessionMetrics& m) { return std::to_string(m.down_switches); });
  row("Index mean", [](const SessionMetrics& m) { return fmt("%.2f", m.mean_index); });
  row("Index SD", [](const SessionMetrics& m) { return fmt("%.2f", m.sd_index); });
  row("Duration (s)", [](const SessionMetrics& m) { return fmt("%.0f", m.duration_s); });
  row("Completed", [](const SessionMetrics& m) { return std::string(m.completed ? "yes" : "no"); });

  if (report.trend) {
    out += "Trend of mean index: " + std::string(to_string(*report.trend)) + " (slope " +
           fmt("%+.3f", *report.slope) + " per session)\n";
  }
  return out;
}

std::string format_csv(const MultiSessionReport& report) {
  std::string out = "session,t1,t2,pct_low,pct_medium,pct_high,up,down,mean,sd,duration_s,completed\n";
  for (const auto& m : report.sessions) {
    std::string name = m.session;
    const bool quote = name.find_first_of(",\"\n") != std::string::npos;
    if (quote) {
      std::string escaped;
      for (char c : name) {
        if (c == '"') escaped += '"';
        escaped += c;
      }
      name = "\"" + escaped + "\"";
    }
    out += name + "," + fmt("%.9g", m.t1) + "," + fmt("%.9g", m.t2) + "," + fmt("%.9g", m.pct_low) + "," +
           fmt("%.9g", m.pct_medium) + "," + fmt("%.9g", m.pct_high) + "," + std::to_string(m.up_switches) + "," +
           std::to_string(m.down_switches) + "," + fmt("%.9g", m.mean_index) + "," + fmt("%.9g", m.sd_index) + "," +
           fmt("%.9g", m.duration_s) + "," + (m.completed ? "true" : "false") + "\n";
  }
  return out;
}

json format_json(const MultiSessionReport& report, std::span<const SessionLog> logs) {
  json sessions = json::array();
  for (std::size_t i = 0; i < report.sessions.size(); ++i) {
    const auto& m = report.sessions[i];
    json s{{"session", m.session},
           {"t1", m.t1},
           {"t2", m.t2},
           {"pct_low", m.pct_low},
           {"pct_medium", m.pct_medium},
           {"pct_high", m.pct_high},
           {"up", m.up_switches},
           {"down", m.down_switches},
           {"game_up", m.game_up_switches},
           {"game_down", m.game_down_switches},
           {"mean", m.mean_index},
           {"sd", m.sd_index},
           {"duration_s", m.duration_s},
           {"completed", m.completed}};
    if (i < logs.size()) {
      const auto trace = extract_training(logs[i]);
      json raw = json::array();
      json thresholds = json::array();
      json bands = json::array();
      std::vector<AttentionSample> samples;
      for (const auto& p : trace.points) samples.push_back({p.t, p.index});
      std::optional<std::pair<double, double>> last_th;
      std::optional<PerformanceStage> band_stage;
      double band_start = 0.0;
      for (std::size_t k = 0; k < trace.points.size(); ++k) {
        const auto& p = trace.points[k];
        raw.push_back({p.t, p.index});
        if (!last_th || last_th->first != p.thresholds.t1 || last_th->second != p.thresholds.t2) {
          thresholds.push_back({{"t", p.t}, {"t1", p.thresholds.t1}, {"t2", p.thresholds.t2}});
          last_th = std::make_pair(p.thresholds.t1, p.thresholds.t2);
        }
        const auto stage = classify_stage(p.index, p.thresholds);
        if (!band_stage || *band_stage != stage) {
          if (band_stage) bands.push_back({{"t_start", band_start}, {"t_end", p.t}, {"stage", to_string(*band_stage)}});
          band_stage = stage;
          band_start = p.t;
        }
      }
      if (band_stage) {
        bands.push_back(
            {{"t_start", band_start}, {"t_end", trace.points.back().t}, {"stage", to_string(*band_stage)}});
      }
      json smoothed = json::array();
      if (!samples.empty()) {
        for (const auto& p : moving_average(samples, 10.0)) smoothed.push_back({p.t, normalize_number(p.index)});
      }
      s["trace"] = std::move(raw);
      s["smoothed"] = std::move(smoothed);
      s["thresholds"] = std::move(thresholds);
      s["stage_bands"] = std::move(bands);
    }
    sessions.push_back(std::move(s));
  }
  json out{{"sessions", std::move(sessions)}, {"groups", report.groups}};
  if (report.slope) {
    out["slope"] = *report.slope;
    out["trend"] = to_string(*report.trend);
  }
  return out;
}

}  // namespace nfb
