#include "nfb/protocol.hpp"

#include <cmath>
#include <cstdio>
#include <initializer_list>

#include "nfb/error.hpp"
#include "nfb/numeric.hpp"

namespace nfb {

using nlohmann::json;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

[[noreturn]] void encode_error(const std::string& what) { throw Error(ErrorCode::Encode, "encode: " + what); }

[[noreturn]] void schema_error(const std::string& what) { throw ProtocolError("schema", what); }

double num(double x, const char* field) {
  if (!std::isfinite(x)) encode_error(std::string(field) + " is not finite");
  return normalize_number(x);
}

double index_value(double x, const char* field) {
  const double v = num(x, field);
  if (v < 0.0 || v > 100.0) encode_error(std::string(field) + " outside [0,100]");
  return v;
}

// Copies arbitrary JSON with every float normalized; rejects NaN/inf.
json normalized(const json& j) {
  switch (j.type()) {
    case json::value_t::number_float:
      return num(j.get<double>(), "payload value");
    case json::value_t::array: {
      json out = json::array();
      for (const auto& v : j) out.push_back(normalized(v));
      return out;
    }
    case json::value_t::object: {
      json out = json::object();
      for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = normalized(it.value());
      return out;
    }
    case json::value_t::discarded:
      encode_error("discarded json value");
    default:
      return j;
  }
}

void require_finite_tree(const json& j, const char* field) {
  switch (j.type()) {
    case json::value_t::number_float:
      if (!std::isfinite(j.get<double>())) throw ProtocolError("range", std::string(field) + " holds a non-finite number");
      return;
    case json::value_t::array:
    case json::value_t::object:
      for (const auto& v : j) require_finite_tree(v, field);
      return;
    default:
      return;
  }
}

class Reader {
 public:
  Reader(const json& j, std::string_view what, std::initializer_list<std::string_view> allowed)
      : j_(j), what_(what) {
    if (!j.is_object()) schema_error(std::string(what) + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
      bool known = false;
      for (auto a : allowed) known = known || a == it.key();
      if (!known) schema_error(std::string(what) + ": unknown field '" + it.key() + "'");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }

  const json& raw(const char* key) const {
    auto it = j_.find(key);
    if (it == j_.end()) schema_error(what_ + ": missing field '" + key + "'");
    return *it;
  }

  double number(const char* key) const {
    const auto& v = raw(key);
    if (!v.is_number()) schema_error(what_ + "." + key + " must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) schema_error(what_ + "." + key + " must be finite");
    return d;
  }

  double index(const char* key) const {
    const double d = number(key);
    if (d < 0.0 || d > 100.0) throw ProtocolError("range", what_ + "." + key + " outside [0,100]");
    return d;
  }

  std::int64_t integer(const char* key) const {
    const auto& v = raw(key);
    if (v.is_number_unsigned()) {
      const auto u = v.get<std::uint64_t>();
      if (u > static_cast<std::uint64_t>(INT64_MAX)) schema_error(what_ + "." + key + " out of range");
      return static_cast<std::int64_t>(u);
    }
    if (!v.is_number_integer()) schema_error(what_ + "." + key + " must be an integer");
    return v.get<std::int64_t>();
  }

  std::string string(const char* key) const {
    const auto& v = raw(key);
    if (!v.is_string()) schema_error(what_ + "." + key + " must be a string");
    return v.get<std::string>();
  }

  bool boolean(const char* key) const {
    const auto& v = raw(key);
    if (!v.is_boolean()) schema_error(what_ + "." + key + " must be a boolean");
    return v.get<bool>();
  }

  template <typename E, typename Parse>
  E enumeration(const char* key, Parse parse) const {
    auto parsed = parse(string(key));
    if (!parsed) schema_error(what_ + "." + key + " has an unknown value");
    return *parsed;
  }

  std::optional<std::string> opt_string(const char* key) const {
    return has(key) ? std::optional<std::string>(string(key)) : std::nullopt;
  }
  std::optional<double> opt_number(const char* key) const {
    return has(key) ? std::optional<double>(number(key)) : std::nullopt;
  }

 private:
  const json& j_;
  std::string what_;
};

void require_one_of(const std::string& value, std::initializer_list<std::string_view> allowed, const char* field) {
  for (auto a : allowed) {
    if (a == value) return;
  }
  schema_error(std::string(field) + " has an unknown value '" + value + "'");
}

std::int64_t non_negative(std::int64_t v, const char* field) {
  if (v < 0) schema_error(std::string(field) + " must be >= 0");
  return v;
}

json encode_body(const HelloBody& b) {
  json j{{"role", b.role}};
  if (b.device) j["device"] = *b.device;
  if (b.name) j["name"] = *b.name;
  return j;
}

json encode_body(const EegFrameBody& b) {
  if (!(b.sample_rate_hz > 0)) encode_error("eeg_frame.sample_rate_hz must be > 0");
  json channels = json::array();
  const std::size_t len = b.channels.empty() ? 0 : b.channels.front().size();
  for (const auto& ch : b.channels) {
    if (ch.size() != len) encode_error("eeg_frame channels must have equal length");
    json row = json::array();
    for (double v : ch) row.push_back(num(v, "eeg_frame sample"));
    channels.push_back(std::move(row));
  }
  return {{"sample_rate_hz", num(b.sample_rate_hz, "sample_rate_hz")}, {"channels", std::move(channels)}};
}

json encode_body(const AttentionSampleBody& b) { return {{"index", index_value(b.index, "index")}}; }

json encode_body(const CalibrateBeginBody& b) {
  if (!(b.duration_s > 0)) encode_error("calibrate_begin.duration_s must be > 0");
  return {{"duration_s", num(b.duration_s, "duration_s")}};
}

json encode_body(const CalibrateResultBody& b) {
  return {{"baseline", index_value(b.baseline, "baseline")},
          {"t1", index_value(b.t1, "t1")},
          {"t2", index_value(b.t2, "t2")},
          {"source", b.source},
          {"samples", b.samples}};
}

json encode_body(const ThresholdSetBody& b) {
  json j{{"t1", index_value(b.t1, "t1")}, {"t2", index_value(b.t2, "t2")}};
  if (b.source) j["source"] = *b.source;
  return j;
}

json encode_body(const SessionControlBody& b) {
  json j{{"action", to_string(b.action)}};
  if (b.phase) j["phase"] = to_string(*b.phase);
  if (b.paused) j["paused"] = *b.paused;
  if (b.reason) j["reason"] = *b.reason;
  if (b.session_id) j["session_id"] = *b.session_id;
  if (b.character_skins) j["character_skins"] = normalized(*b.character_skins);
  return j;
}

json encode_body(const FeedbackEvent& b) {
  const auto cell = feedback_cell(b.kind);
  if (cell.level != b.level || cell.modality != b.modality) {
    encode_error("feedback_event level/modality does not match kind " + std::string(to_string(b.kind)));
  }
  if (!b.payload.is_object()) encode_error("feedback_event.payload must be an object");
  return {{"kind", to_string(b.kind)},
          {"level", to_string(b.level)},
          {"modality", to_string(b.modality)},
          {"payload", normalized(b.payload)}};
}

json encode_body(const GameProgressBody& b) {
  if (b.eggs_stored < 0 || b.eggs_in_flight < 0 || b.carts_filled < 0) encode_error("negative egg counts");
  json j{{"stage", to_string(b.stage)},
         {"eggs_stored", b.eggs_stored},
         {"eggs_in_flight", b.eggs_in_flight},
         {"carts_filled", b.carts_filled},
         {"bird_height", num(b.bird_height, "bird_height")},
         {"lay_interval_s", num(b.lay_interval_s, "lay_interval_s")},
         {"music_tempo", to_string(b.music_tempo)},
         {"boy_face", to_string(b.boy_face)},
         {"girl_face", to_string(b.girl_face)}};
  if (b.phase) j["phase"] = to_string(*b.phase);
  if (b.t1) j["t1"] = index_value(*b.t1, "t1");
  if (b.t2) j["t2"] = index_value(*b.t2, "t2");
  if (b.state_hash) j["state_hash"] = *b.state_hash;
  return j;
}

json encode_body(const SessionReportBody& b) {
  if (b.score < 0 || b.score > 100) encode_error("session_report.score outside [0,100]");
  if (b.stars < 1 || b.stars > 3) encode_error("session_report.stars outside [1,3]");
  return {{"score", b.score},
          {"stars", b.stars},
          {"duration_s", num(b.duration_s, "duration_s")},
          {"eggs_stored", b.eggs_stored},
          {"t1", index_value(b.t1, "t1")},
          {"t2", index_value(b.t2, "t2")},
          {"completed", b.completed},
          {"end_reason", b.end_reason},
          {"pct_low", num(b.pct_low, "pct_low")},
          {"pct_medium", num(b.pct_medium, "pct_medium")},
          {"pct_high", num(b.pct_high, "pct_high")},
          {"up_switches", b.up_switches},
          {"down_switches", b.down_switches},
          {"game_up_switches", b.game_up_switches},
          {"game_down_switches", b.game_down_switches},
          {"mean_index", num(b.mean_index, "mean_index")},
          {"sd_index", num(b.sd_index, "sd_index")}};
}

json encode_body(const AckBody& b) { return {{"ref_seq", b.ref_seq}, {"ref_type", to_string(b.ref_type)}}; }

json encode_body(const ErrorBody& b) {
  json j{{"code", b.code}, {"reason", b.reason}};
  if (b.ref_seq) j["ref_seq"] = *b.ref_seq;
  return j;
}

}  // namespace

json body_to_json(const Body& body) {
  return std::visit([](const auto& b) { return encode_body(b); }, body);
}

Body body_from_json(MessageType type, const json& j) {
  switch (type) {
    case MessageType::Hello: {
      Reader r(j, "hello", {"role", "device", "name"});
      HelloBody b{r.string("role"), r.opt_string("device"), r.opt_string("name")};
      require_one_of(b.role, {"headband", "observer", "console"}, "hello.role");
      if (b.device) require_one_of(*b.device, {"simulator", "passthrough"}, "hello.device");
      return b;
    }
    case MessageType::EegFrame: {
      Reader r(j, "eeg_frame", {"sample_rate_hz", "channels"});
      EegFrameBody b;
      b.sample_rate_hz = r.number("sample_rate_hz");
      if (!(b.sample_rate_hz > 0)) throw ProtocolError("range", "eeg_frame.sample_rate_hz must be > 0");
      const auto& channels = r.raw("channels");
      if (!channels.is_array()) schema_error("eeg_frame.channels must be an array");
      for (const auto& row : channels) {
        if (!row.is_array()) schema_error("eeg_frame.channels rows must be arrays");
        std::vector<double> values;
        values.reserve(row.size());
        for (const auto& v : row) {
          if (!v.is_number()) schema_error("eeg_frame samples must be numbers");
          const double d = v.get<double>();
          if (!std::isfinite(d)) throw ProtocolError("range", "eeg_frame samples must be finite");
          values.push_back(d);
        }
        if (!b.channels.empty() && values.size() != b.channels.front().size()) {
          schema_error("eeg_frame channels must have equal length");
        }
        b.channels.push_back(std::move(values));
      }
      return b;
    }
    case MessageType::AttentionSample: {
      Reader r(j, "attention_sample", {"index"});
      return AttentionSampleBody{r.index("index")};
    }
    case MessageType::CalibrateBegin: {
      Reader r(j, "calibrate_begin", {"duration_s"});
      const double d = r.number("duration_s");
      if (!(d > 0)) throw ProtocolError("range", "calibrate_begin.duration_s must be > 0");
      return CalibrateBeginBody{d};
    }
    case MessageType::CalibrateResult: {
      Reader r(j, "calibrate_result", {"baseline", "t1", "t2", "source", "samples"});
      CalibrateResultBody b{r.index("baseline"), r.index("t1"), r.index("t2"), r.string("source"),
                            non_negative(r.integer("samples"), "calibrate_result.samples")};
      require_one_of(b.source, {"adaptive", "manual"}, "calibrate_result.source");
      return b;
    }
    case MessageType::ThresholdSet: {
      Reader r(j, "threshold_set", {"t1", "t2", "source"});
      ThresholdSetBody b{r.index("t1"), r.index("t2"), r.opt_string("source")};
      if (b.source) require_one_of(*b.source, {"adaptive", "manual"}, "threshold_set.source");
      return b;
    }
    case MessageType::SessionControl: {
      Reader r(j, "session_control", {"action", "phase", "paused", "reason", "session_id", "character_skins"});
      SessionControlBody b;
      b.action = r.enumeration<ControlAction>("action", parse_action);
      if (r.has("phase")) b.phase = r.enumeration<SessionPhase>("phase", parse_phase);
      if (r.has("paused")) b.paused = r.boolean("paused");
      b.reason = r.opt_string("reason");
      b.session_id = r.opt_string("session_id");
      if (r.has("character_skins")) {
        b.character_skins = r.raw("character_skins");
        require_finite_tree(*b.character_skins, "session_control.character_skins");
      }
      return b;
    }
    case MessageType::FeedbackEvent: {
      Reader r(j, "feedback_event", {"kind", "level", "modality", "payload"});
      FeedbackEvent b;
      b.kind = r.enumeration<FeedbackKind>("kind", parse_kind);
      b.level = r.enumeration<FeedbackLevel>("level", parse_level);
      b.modality = r.enumeration<Modality>("modality", parse_modality);
      const auto cell = feedback_cell(b.kind);
      if (cell.level != b.level || cell.modality != b.modality) {
        schema_error("feedback_event level/modality do not match kind");
      }
      b.payload = r.raw("payload");
      if (!b.payload.is_object()) schema_error("feedback_event.payload must be an object");
      require_finite_tree(b.payload, "feedback_event.payload");
      return b;
    }
    case MessageType::GameProgress: {
      Reader r(j, "game_progress",
               {"stage", "eggs_stored", "eggs_in_flight", "carts_filled", "bird_height", "lay_interval_s",
                "music_tempo", "boy_face", "girl_face", "phase", "t1", "t2", "state_hash"});
      GameProgressBody b;
      b.stage = r.enumeration<PerformanceStage>("stage", parse_stage);
      b.eggs_stored = non_negative(r.integer("eggs_stored"), "eggs_stored");
      b.eggs_in_flight = non_negative(r.integer("eggs_in_flight"), "eggs_in_flight");
      b.carts_filled = non_negative(r.integer("carts_filled"), "carts_filled");
      b.bird_height = r.number("bird_height");
      b.lay_interval_s = r.number("lay_interval_s");
      b.music_tempo = r.enumeration<PerformanceStage>("music_tempo", parse_stage);
      b.boy_face = r.enumeration<Face>("boy_face", parse_face);
      b.girl_face = r.enumeration<Face>("girl_face", parse_face);
      if (r.has("phase")) b.phase = r.enumeration<SessionPhase>("phase", parse_phase);
      if (r.has("t1")) b.t1 = r.index("t1");
      if (r.has("t2")) b.t2 = r.index("t2");
      b.state_hash = r.opt_string("state_hash");
      return b;
    }
    case MessageType::SessionReport: {
      Reader r(j, "session_report",
               {"score", "stars", "duration_s", "eggs_stored", "t1", "t2", "completed", "end_reason", "pct_low",
                "pct_medium", "pct_high", "up_switches", "down_switches", "game_up_switches", "game_down_switches",
                "mean_index", "sd_index"});
      SessionReportBody b;
      b.score = r.integer("score");
      b.stars = r.integer("stars");
      if (b.score < 0 || b.score > 100) throw ProtocolError("range", "session_report.score outside [0,100]");
      if (b.stars < 1 || b.stars > 3) throw ProtocolError("range", "session_report.stars outside [1,3]");
      b.duration_s = r.number("duration_s");
      b.eggs_stored = non_negative(r.integer("eggs_stored"), "eggs_stored");
      b.t1 = r.index("t1");
      b.t2 = r.index("t2");
      b.completed = r.boolean("completed");
      b.end_reason = r.string("end_reason");
      b.pct_low = r.number("pct_low");
      b.pct_medium = r.number("pct_medium");
      b.pct_high = r.number("pct_high");
      b.up_switches = non_negative(r.integer("up_switches"), "up_switches");
      b.down_switches = non_negative(r.integer("down_switches"), "down_switches");
      b.game_up_switches = non_negative(r.integer("game_up_switches"), "game_up_switches");
      b.game_down_switches = non_negative(r.integer("game_down_switches"), "game_down_switches");
      b.mean_index = r.index("mean_index");
      b.sd_index = r.number("sd_index");
      return b;
    }
    case MessageType::Ack: {
      Reader r(j, "ack", {"ref_seq", "ref_type"});
      return AckBody{r.integer("ref_seq"), r.enumeration<MessageType>("ref_type", parse_message_type)};
    }
    case MessageType::Error: {
      Reader r(j, "error", {"code", "reason", "ref_seq"});
      ErrorBody b{r.string("code"), r.string("reason"), std::nullopt};
      if (r.has("ref_seq")) b.ref_seq = r.integer("ref_seq");
      return b;
    }
  }
  schema_error("unhandled message type");
}

std::string encode(const Message& msg) {
  if (msg.v != kProtocolVersion) encode_error("unsupported protocol version");
  if (msg.seq < 0) encode_error("seq must be >= 0");
  json j{{"v", msg.v},
         {"type", to_string(msg.type())},
         {"t", num(msg.t, "t")},
         {"seq", msg.seq},
         {"body", body_to_json(msg.body)}};
  std::string line;
  try {
    line = j.dump();
  } catch (const json::exception& e) {
    encode_error(e.what());
  }
  line.push_back('\n');
  return line;
}

Message decode(std::string_view line) {
  if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  if (line.find('\n') != std::string_view::npos) throw ProtocolError("framing", "embedded newline");
  if (line.size() > kMaxLineBytes) throw ProtocolError("framing", "line too long");

  json j = json::parse(line, nullptr, false);
  if (j.is_discarded()) throw ProtocolError("malformed_json", "line is not valid JSON");
  Reader r(j, "envelope", {"v", "type", "t", "seq", "body"});

  Message msg;
  msg.v = r.integer("v");
  if (msg.v != kProtocolVersion) throw ProtocolError("version", "unsupported protocol version");
  const auto type_name = r.string("type");
  const auto type = parse_message_type(type_name);
  if (!type) throw ProtocolError("unknown_type", "unknown message type '" + type_name + "'");
  msg.t = r.number("t");
  if (msg.t < 0) throw ProtocolError("range", "t must be >= 0");
  msg.seq = non_negative(r.integer("seq"), "seq");
  msg.body = body_from_json(*type, r.raw("body"));
  return msg;
}

std::string snapshot_hash(const GameProgressBody& body) {
  GameProgressBody copy = body;
  copy.state_hash.reset();
  const auto canonical = body_to_json(copy).dump();
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(canonical)));
  return buf;
}

void LineFramer::feed(std::string_view bytes) {
  if (read_pos_ > 0 && read_pos_ == buffer_.size()) {
    buffer_.clear();
    read_pos_ = 0;
  }
  buffer_.append(bytes);
}

std::optional<std::string> LineFramer::next_line() {
  for (;;) {
    const auto nl = buffer_.find('\n', read_pos_);
    if (nl == std::string::npos) {
      if (buffered() > max_line_) {
        // Drop the oversized prefix; keep discarding until its newline.
        discarding_ = true;
        overflow_ = true;
        buffer_.clear();
        read_pos_ = 0;
      }
      if (read_pos_ > 4096 && read_pos_ * 2 > buffer_.size()) {
        buffer_.erase(0, read_pos_);
        read_pos_ = 0;
      }
      return std::nullopt;
    }
    std::string line = buffer_.substr(read_pos_, nl - read_pos_);
    read_pos_ = nl + 1;
    if (discarding_) {
      discarding_ = false;
      continue;
    }
    if (line.size() > max_line_) {
      overflow_ = true;
      continue;
    }
    return line;
  }
}

bool LineFramer::take_overflow() {
  const bool was = overflow_;
  overflow_ = false;
  return was;
}

}  // namespace nfb
