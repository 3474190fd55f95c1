#include "nfb/records.hpp"

#include <utility>

namespace nfb {

namespace {

constexpr std::array<std::pair<SessionPhase, std::string_view>, 4> kPhaseNames{{
    {SessionPhase::Customization, "customization"},
    {SessionPhase::Calibration, "calibration"},
    {SessionPhase::Training, "training"},
    {SessionPhase::Conclusion, "conclusion"},
}};

constexpr std::array<std::pair<ControlAction, std::string_view>, 5> kActionNames{{
    {ControlAction::Start, "start"},
    {ControlAction::Pause, "pause"},
    {ControlAction::Resume, "resume"},
    {ControlAction::Stop, "stop"},
    {ControlAction::Phase, "phase"},
}};

constexpr std::array<std::pair<MessageType, std::string_view>, 12> kTypeNames{{
    {MessageType::Hello, "hello"},
    {MessageType::EegFrame, "eeg_frame"},
    {MessageType::AttentionSample, "attention_sample"},
    {MessageType::CalibrateBegin, "calibrate_begin"},
    {MessageType::CalibrateResult, "calibrate_result"},
    {MessageType::ThresholdSet, "threshold_set"},
    {MessageType::SessionControl, "session_control"},
    {MessageType::FeedbackEvent, "feedback_event"},
    {MessageType::GameProgress, "game_progress"},
    {MessageType::SessionReport, "session_report"},
    {MessageType::Ack, "ack"},
    {MessageType::Error, "error"},
}};

template <typename Table, typename E>
std::string_view lookup(const Table& table, E v) {
  for (const auto& [e, name] : table) {
    if (e == v) return name;
  }
  return "?";
}

template <typename E, typename Table>
std::optional<E> reverse_lookup(const Table& table, std::string_view s) {
  for (const auto& [e, name] : table) {
    if (name == s) return e;
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(SessionPhase v) { return lookup(kPhaseNames, v); }
std::string_view to_string(ControlAction v) { return lookup(kActionNames, v); }
std::string_view to_string(MessageType v) { return lookup(kTypeNames, v); }
std::optional<SessionPhase> parse_phase(std::string_view s) { return reverse_lookup<SessionPhase>(kPhaseNames, s); }
std::optional<ControlAction> parse_action(std::string_view s) { return reverse_lookup<ControlAction>(kActionNames, s); }
std::optional<MessageType> parse_message_type(std::string_view s) {
  return reverse_lookup<MessageType>(kTypeNames, s);
}

FeedbackEvent make_event(FeedbackKind kind, nlohmann::json payload) {
  const auto cell = feedback_cell(kind);
  return FeedbackEvent{kind, cell.level, cell.modality, std::move(payload)};
}

MessageType type_of(const Body& body) {
  // Variant alternatives are declared in MessageType order.
  return static_cast<MessageType>(body.index());
}

}  // namespace nfb
