#include "nfb/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "nfb/error.hpp"

namespace nfb {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::Configuration, "config: " + path + ": " + what);
}

// Strict view of one JSON object: every key must be consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const auto* v = find(key)) {
      if (!v->is_number()) fail(key_path(key), "expected a number");
      out = v->get<double>();
      if (!std::isfinite(out)) fail(key_path(key), "must be finite");
    }
  }

  template <class Int>
  void integer(const std::string& key, Int& out) {
    if (const auto* v = find(key)) {
      if (!v->is_number_integer() && !v->is_number_unsigned()) fail(key_path(key), "expected an integer");
      if constexpr (std::is_unsigned_v<Int>) {
        if (v->is_number_integer() && v->get<std::int64_t>() < 0) fail(key_path(key), "must be >= 0");
      }
      out = v->get<Int>();
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const auto* v = find(key)) {
      if (!v->is_string()) fail(key_path(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const auto* v = find(key)) {
      if (!v->is_boolean()) fail(key_path(key), "expected true or false");
      out = v->get<bool>();
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) fail(key_path(it.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

AttentionProfile scripted(std::vector<std::pair<double, double>> points, std::uint64_t seed) {
  AttentionProfile p;
  p.kind = ProfileKind::Scripted;
  p.scripted_points = std::move(points);
  p.seed = seed;
  return p;
}

AttentionProfile parse_profile(const json& j, std::string& name) {
  if (j.is_string()) {
    name = j.get<std::string>();
    return builtin_profile(name);
  }
  Section s(j, "profile");
  std::string kind = "scripted";
  s.string("kind", kind);
  AttentionProfile p;
  if (kind == "builtin") {
    s.string("name", name);
    p = builtin_profile(name);
  } else if (kind == "scripted") {
    name = "scripted";
    p.kind = ProfileKind::Scripted;
    if (const auto* pts = s.find("points")) {
      if (!pts->is_array()) fail("profile.points", "expected an array of [t, attention] pairs");
      for (const auto& pt : *pts) {
        if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() || !pt[1].is_number()) {
          fail("profile.points", "expected [t, attention] pairs");
        }
        p.scripted_points.emplace_back(pt[0].get<double>(), pt[1].get<double>());
      }
    }
  } else if (kind == "ou") {
    name = "ou";
    p.kind = ProfileKind::OrnsteinUhlenbeck;
    s.number("mean", p.ou.mean);
    s.number("reversion_rate", p.ou.reversion_rate);
    s.number("volatility", p.ou.volatility);
  } else {
    fail("profile.kind", "expected builtin, scripted or ou");
  }
  s.integer("seed", p.seed);
  s.number("feedback_coupling", p.feedback_coupling);
  s.finish();
  return p;
}

}  // namespace

std::string_view to_string(DeviceMode m) { return m == DeviceMode::Simulator ? "simulator" : "passthrough"; }

std::optional<DeviceMode> parse_device_mode(std::string_view s) {
  if (s == "simulator") return DeviceMode::Simulator;
  if (s == "passthrough") return DeviceMode::Passthrough;
  return std::nullopt;
}

AttentionProfile builtin_profile(const std::string& name, std::uint64_t seed) {
  // Rest until 10 s, calibration level until 70 s, training level after.
  auto three_phase = [&](double calibration, double training) {
    return scripted({{0.0, 0.0}, {10.0, 0.0}, {10.0, calibration}, {70.0, calibration}, {70.0, training}}, seed);
  };
  if (name == "medium") return three_phase(0.3, 0.3);
  if (name == "low") return three_phase(0.3, 0.15);
  if (name == "high") return three_phase(0.3, 0.45);
  if (name == "rising") {
    return scripted({{0.0, 0.0}, {10.0, 0.0}, {10.0, 0.3}, {70.0, 0.3}, {70.0, 0.2}, {400.0, 0.5}}, seed);
  }
  if (name == "ou") {
    AttentionProfile p;
    p.kind = ProfileKind::OrnsteinUhlenbeck;
    p.ou = OuParams{0.3, 0.2, 0.08};
    p.seed = seed;
    return p;
  }
  throw Error(ErrorCode::Configuration, "unknown profile '" + name + "' (expected low, medium, high, rising or ou)");
}

void RunConfig::validate() const {
  profile.validate();
  simulator.validate();
  pipeline.validate();
  if (manual_thresholds) {
    try {
      set_manual_thresholds(manual_thresholds->first, manual_thresholds->second);
    } catch (const Error& e) {
      throw Error(ErrorCode::Configuration, std::string("calibration.manual_thresholds: ") + e.what());
    }
  }
  if (!std::isfinite(duration_cap_s) || duration_cap_s <= 0) {
    throw Error(ErrorCode::Configuration, "duration_cap_s must be > 0");
  }
  if (!std::isfinite(reorder_window_s) || reorder_window_s < 0) {
    throw Error(ErrorCode::Configuration, "reorder_window_s must be >= 0");
  }
  if (observer_queue < 16) throw Error(ErrorCode::Configuration, "observer_queue must be >= 16");
  if (!std::isfinite(observer_eeg_rate_hz) || observer_eeg_rate_hz <= 0) {
    throw Error(ErrorCode::Configuration, "observer_eeg_rate_hz must be > 0");
  }
  if (pipeline.session.session_id.empty() ||
      pipeline.session.session_id.find_first_of("/\\ \t\n") != std::string::npos) {
    throw Error(ErrorCode::Configuration, "session id must be non-empty without spaces or slashes");
  }
}

void RunConfig::set_seed(std::uint64_t seed) {
  profile.seed = seed;
  pipeline.session.engine.palette_seed = seed;
  pipeline.session.session_id = profile_name + "-s" + std::to_string(seed);
}

RunConfig run_config_from_json(const json& j) {
  RunConfig cfg;
  Section root(j, "");
  std::optional<std::uint64_t> seed;

  if (const auto* p = root.find("profile")) {
    cfg.profile = parse_profile(*p, cfg.profile_name);
  } else {
    cfg.profile = builtin_profile(cfg.profile_name);
  }
  if (const auto* v = root.find("seed")) {
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0)) {
      fail("seed", "expected a non-negative integer");
    }
    seed = v->get<std::uint64_t>();
  }

  if (const auto* d = root.find("dsp")) {
    Section s(*d, "dsp");
    auto& dsp = cfg.pipeline.dsp;
    s.number("sample_rate_hz", dsp.sample_rate_hz);
    s.integer("channel_count", dsp.channel_count);
    s.number("mu_low_hz", dsp.mu_band.low_hz);
    s.number("mu_high_hz", dsp.mu_band.high_hz);
    s.number("window_s", dsp.window_s);
    s.number("hop_s", dsp.hop_s);
    s.number("kappa", dsp.kappa);
    s.finish();
  }
  if (const auto* c = root.find("calibration")) {
    Section s(*c, "calibration");
    auto& cal = cfg.pipeline.session.calibration;
    s.number("alpha", cal.alpha);
    s.number("beta", cal.beta);
    s.number("lower_bound", cal.lower_bound);
    s.number("upper_bound", cal.upper_bound);
    s.number("duration_s", cal.calibration_duration_s);
    s.integer("min_samples", cal.min_samples);
    s.number("repair_width", cal.repair_width);
    if (const auto* th = s.find("manual_thresholds")) {
      if (!th->is_array() || th->size() != 2 || !(*th)[0].is_number() || !(*th)[1].is_number()) {
        fail("calibration.manual_thresholds", "expected [t1, t2]");
      }
      cfg.manual_thresholds = std::make_pair((*th)[0].get<double>(), (*th)[1].get<double>());
    }
    s.finish();
  }
  if (const auto* l = root.find("lay_interval_s")) {
    Section s(*l, "lay_interval_s");
    auto& lay = cfg.pipeline.session.engine.lay_interval_s;
    s.number("low", lay.low);
    s.number("medium", lay.medium);
    s.number("high", lay.high);
    s.finish();
  }
  std::optional<std::uint64_t> palette_seed;
  if (const auto* e = root.find("engine")) {
    Section s(*e, "engine");
    auto& eng = cfg.pipeline.session.engine;
    s.integer("median_window", eng.median_window);
    s.number("handover_delay_s", eng.handover_delay_s);
    s.number("reinforcer_window_s", eng.reinforcer_window_s);
    s.integer("egg_goal", eng.egg_goal);
    s.integer("row_size", eng.row_size);
    s.integer("tray_size", eng.tray_size);
    std::uint64_t ps = 0;
    if (s.find("palette_seed")) {
      s.integer("palette_seed", ps);
      palette_seed = ps;
    }
    s.finish();
  }
  if (const auto* m = root.find("simulator")) {
    Section s(*m, "simulator");
    s.number("mu_frequency_hz", cfg.simulator.mu_frequency_hz);
    s.number("mu_amplitude_uv", cfg.simulator.mu_amplitude_uv);
    s.number("noise_rms_uv", cfg.simulator.noise_rms_uv);
    s.number("coupling_decay_s", cfg.simulator.coupling_decay_s);
    s.finish();
  }
  std::optional<std::string> session_id;
  if (const auto* ss = root.find("session")) {
    Section s(*ss, "session");
    std::string id;
    if (s.find("id")) {
      s.string("id", id);
      session_id = id;
    }
    s.number("customization_s", cfg.pipeline.customization_s);
    s.number("duration_cap_s", cfg.duration_cap_s);
    if (const auto* skins = s.find("character_skins")) {
      if (!skins->is_object()) fail("session.character_skins", "expected an object");
      cfg.pipeline.session.character_skins = *skins;
    }
    s.finish();
  }
  if (const auto* sv = root.find("server")) {
    Section s(*sv, "server");
    s.string("listen", cfg.listen);
    s.string("ws_listen", cfg.ws_listen);
    std::string device(to_string(cfg.device));
    s.string("device", device);
    const auto mode = parse_device_mode(device);
    if (!mode) fail("server.device", "expected simulator or passthrough");
    cfg.device = *mode;
    s.number("reorder_window_s", cfg.reorder_window_s);
    s.integer("observer_queue", cfg.observer_queue);
    s.number("observer_eeg_rate_hz", cfg.observer_eeg_rate_hz);
    s.boolean("auto_start", cfg.auto_start);
    s.finish();
  }
  root.string("out_dir", cfg.out_dir);
  root.finish();

  cfg.set_seed(seed.value_or(cfg.profile.seed));
  if (palette_seed) cfg.pipeline.session.engine.palette_seed = *palette_seed;
  if (session_id) cfg.pipeline.session.session_id = *session_id;
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Configuration, "config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Configuration, "config: " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

json run_config_to_json(const RunConfig& cfg) {
  const auto& p = cfg.profile;
  json profile;
  if (p.kind == ProfileKind::Scripted) {
    json pts = json::array();
    for (const auto& [t, a] : p.scripted_points) pts.push_back({t, a});
    profile = {{"kind", "scripted"}, {"points", pts}};
  } else {
    profile = {{"kind", "ou"},
               {"mean", p.ou.mean},
               {"reversion_rate", p.ou.reversion_rate},
               {"volatility", p.ou.volatility}};
  }
  profile["seed"] = p.seed;
  profile["feedback_coupling"] = p.feedback_coupling;
  const auto& dsp = cfg.pipeline.dsp;
  const auto& cal = cfg.pipeline.session.calibration;
  const auto& eng = cfg.pipeline.session.engine;
  json j{
      {"profile", profile},
      {"dsp",
       {{"sample_rate_hz", dsp.sample_rate_hz},
        {"channel_count", dsp.channel_count},
        {"mu_low_hz", dsp.mu_band.low_hz},
        {"mu_high_hz", dsp.mu_band.high_hz},
        {"window_s", dsp.window_s},
        {"hop_s", dsp.hop_s},
        {"kappa", dsp.kappa}}},
      {"calibration",
       {{"alpha", cal.alpha},
        {"beta", cal.beta},
        {"lower_bound", cal.lower_bound},
        {"upper_bound", cal.upper_bound},
        {"duration_s", cal.calibration_duration_s},
        {"min_samples", cal.min_samples},
        {"repair_width", cal.repair_width}}},
      {"lay_interval_s",
       {{"low", eng.lay_interval_s.low}, {"medium", eng.lay_interval_s.medium}, {"high", eng.lay_interval_s.high}}},
      {"engine",
       {{"median_window", eng.median_window},
        {"handover_delay_s", eng.handover_delay_s},
        {"reinforcer_window_s", eng.reinforcer_window_s},
        {"egg_goal", eng.egg_goal},
        {"row_size", eng.row_size},
        {"tray_size", eng.tray_size},
        {"palette_seed", eng.palette_seed}}},
      {"simulator",
       {{"mu_frequency_hz", cfg.simulator.mu_frequency_hz},
        {"mu_amplitude_uv", cfg.simulator.mu_amplitude_uv},
        {"noise_rms_uv", cfg.simulator.noise_rms_uv},
        {"coupling_decay_s", cfg.simulator.coupling_decay_s}}},
      {"session",
       {{"id", cfg.pipeline.session.session_id},
        {"customization_s", cfg.pipeline.customization_s},
        {"duration_cap_s", cfg.duration_cap_s},
        {"character_skins", cfg.pipeline.session.character_skins}}},
      {"server",
       {{"listen", cfg.listen},
        {"ws_listen", cfg.ws_listen},
        {"device", to_string(cfg.device)},
        {"reorder_window_s", cfg.reorder_window_s},
        {"observer_queue", cfg.observer_queue},
        {"observer_eeg_rate_hz", cfg.observer_eeg_rate_hz},
        {"auto_start", cfg.auto_start}}},
      {"seed", p.seed},
      {"out_dir", cfg.out_dir},
  };
  if (cfg.manual_thresholds) {
    j["calibration"]["manual_thresholds"] = {cfg.manual_thresholds->first, cfg.manual_thresholds->second};
  }
  return j;
}

}  // namespace nfb
