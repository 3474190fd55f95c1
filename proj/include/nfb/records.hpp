#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "nfb/feedback.hpp"

namespace nfb {

enum class SessionPhase { Customization, Calibration, Training, Conclusion };

enum class ControlAction { Start, Pause, Resume, Stop, Phase };

enum class MessageType {
  Hello,
  EegFrame,
  AttentionSample,
  CalibrateBegin,
  CalibrateResult,
  ThresholdSet,
  SessionControl,
  FeedbackEvent,
  GameProgress,
  SessionReport,
  Ack,
  Error,
};

inline constexpr std::array kAllMessageTypes = {
    MessageType::Hello,         MessageType::EegFrame,       MessageType::AttentionSample, MessageType::CalibrateBegin,
    MessageType::CalibrateResult, MessageType::ThresholdSet, MessageType::SessionControl,  MessageType::FeedbackEvent,
    MessageType::GameProgress,  MessageType::SessionReport,  MessageType::Ack,             MessageType::Error,
};

std::string_view to_string(SessionPhase v);
std::string_view to_string(ControlAction v);
std::string_view to_string(MessageType v);
std::optional<SessionPhase> parse_phase(std::string_view s);
std::optional<ControlAction> parse_action(std::string_view s);
std::optional<MessageType> parse_message_type(std::string_view s);

// Message bodies. Each struct is the fixed schema of one message type; the
// optional members are the only fields a sender may omit.

struct HelloBody {
  std::string role;  // headband | observer | console
  std::optional<std::string> device;  // simulator | passthrough
  std::optional<std::string> name;
  bool operator==(const HelloBody&) const = default;
};

struct EegFrameBody {
  double sample_rate_hz{256.0};
  std::vector<std::vector<double>> channels;
  bool operator==(const EegFrameBody&) const = default;
};

struct AttentionSampleBody {
  double index{0.0};
  bool operator==(const AttentionSampleBody&) const = default;
};

struct CalibrateBeginBody {
  double duration_s{60.0};
  bool operator==(const CalibrateBeginBody&) const = default;
};

struct CalibrateResultBody {
  double baseline{0.0};
  double t1{0.0};
  double t2{0.0};
  std::string source{"adaptive"};
  std::int64_t samples{0};
  bool operator==(const CalibrateResultBody&) const = default;
};

struct ThresholdSetBody {
  double t1{0.0};
  double t2{0.0};
  std::optional<std::string> source;
  bool operator==(const ThresholdSetBody&) const = default;
};

struct SessionControlBody {
  ControlAction action{ControlAction::Start};
  std::optional<SessionPhase> phase;
  std::optional<bool> paused;
  std::optional<std::string> reason;
  std::optional<std::string> session_id;
  std::optional<nlohmann::json> character_skins;
  bool operator==(const SessionControlBody&) const = default;
};

struct FeedbackEvent {
  FeedbackKind kind{FeedbackKind::BirdHeight};
  FeedbackLevel level{FeedbackLevel::Immediate};
  Modality modality{Modality::Visual};
  nlohmann::json payload = nlohmann::json::object();
  bool operator==(const FeedbackEvent&) const = default;
};

// Builds an event in the table cell of its kind.
FeedbackEvent make_event(FeedbackKind kind, nlohmann::json payload = nlohmann::json::object());

struct GameProgressBody {
  PerformanceStage stage{PerformanceStage::Low};
  std::int64_t eggs_stored{0};
  std::int64_t eggs_in_flight{0};
  std::int64_t carts_filled{0};
  double bird_height{0.0};
  double lay_interval_s{0.0};
  PerformanceStage music_tempo{PerformanceStage::Low};
  Face boy_face{Face::Neutral};
  Face girl_face{Face::Neutral};
  // Present on snapshots sent to late joiners.
  std::optional<SessionPhase> phase;
  std::optional<double> t1;
  std::optional<double> t2;
  std::optional<std::string> state_hash;
  bool operator==(const GameProgressBody&) const = default;
};

struct SessionReportBody {
  std::int64_t score{0};
  std::int64_t stars{1};
  double duration_s{0.0};
  std::int64_t eggs_stored{0};
  double t1{0.0};
  double t2{0.0};
  bool completed{false};
  std::string end_reason{"completed"};
  double pct_low{0.0};
  double pct_medium{0.0};
  double pct_high{0.0};
  std::int64_t up_switches{0};
  std::int64_t down_switches{0};
  std::int64_t game_up_switches{0};
  std::int64_t game_down_switches{0};
  double mean_index{0.0};
  double sd_index{0.0};
  bool operator==(const SessionReportBody&) const = default;
};

struct AckBody {
  std::int64_t ref_seq{0};
  MessageType ref_type{MessageType::Hello};
  bool operator==(const AckBody&) const = default;
};

struct ErrorBody {
  std::string code;
  std::string reason;
  std::optional<std::int64_t> ref_seq;
  bool operator==(const ErrorBody&) const = default;
};

using Body = std::variant<HelloBody, EegFrameBody, AttentionSampleBody, CalibrateBeginBody, CalibrateResultBody,
                          ThresholdSetBody, SessionControlBody, FeedbackEvent, GameProgressBody, SessionReportBody,
                          AckBody, ErrorBody>;

MessageType type_of(const Body& body);

// A timestamped body; what the engine emits and the log stores.
struct Record {
  double t{0.0};
  Body body;
  bool operator==(const Record&) const = default;
};

using Records = std::vector<Record>;

}  // namespace nfb
