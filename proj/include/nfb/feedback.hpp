#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace nfb {

enum class PerformanceStage { Low, Medium, High };

enum class FeedbackLevel { Immediate, Storytelling, Progress, Reinforcing };

enum class Modality { Visual, Auditory };

enum class FeedbackKind {
  BirdHeight,
  MovementSpeed,
  LayRate,
  FacialExpression,
  MusicTempo,
  HeartBubbles,
  EggStored,
  RowHalo,
  Woohoo,
  TrayStars,
  OhYea,
  Victory,
  StarsAwarded,
  ColoredEgg,
  GoldenEgg,
  Bubbles,
  BubbleSound,
  Emoji,
  CoinSound,
};

inline constexpr std::array kAllFeedbackKinds = {
    FeedbackKind::BirdHeight,  FeedbackKind::MovementSpeed, FeedbackKind::LayRate,    FeedbackKind::FacialExpression,
    FeedbackKind::MusicTempo,  FeedbackKind::HeartBubbles,  FeedbackKind::EggStored,  FeedbackKind::RowHalo,
    FeedbackKind::Woohoo,      FeedbackKind::TrayStars,     FeedbackKind::OhYea,      FeedbackKind::Victory,
    FeedbackKind::StarsAwarded, FeedbackKind::ColoredEgg,   FeedbackKind::GoldenEgg,  FeedbackKind::Bubbles,
    FeedbackKind::BubbleSound, FeedbackKind::Emoji,         FeedbackKind::CoinSound,
};

// The (level, modality) cell of the implemented-feedback table each kind
// belongs to, with the row it realizes.
struct FeedbackCell {
  FeedbackLevel level;
  Modality modality;
  std::string_view row;
};

FeedbackCell feedback_cell(FeedbackKind kind);

enum class Character { Boy, Girl };

enum class Animation {
  HeadUpForCatching,
  CatchingEggs,
  TurningWithEggs,
  HandingOverEggs,
  ReceivingEggs,
  PuttingDownEggs,
  TurningBack,
};

enum class Face { Neutral, Expecting, Smiling, Happy, ExtremelyHappy };

// Animations each character performs in the collection loop.
bool performs(Character who, Animation animation);

// Facial expression for a character animation at a performance stage.
// sustained_high is true after more than 3 s in the high stage. Returns
// nullopt for animations the character does not perform.
std::optional<Face> face_for(Character who, Animation animation, PerformanceStage stage, bool sustained_high);

std::string_view to_string(PerformanceStage v);
std::string_view to_string(FeedbackLevel v);
std::string_view to_string(Modality v);
std::string_view to_string(FeedbackKind v);
std::string_view to_string(Character v);
std::string_view to_string(Animation v);
std::string_view to_string(Face v);

std::optional<PerformanceStage> parse_stage(std::string_view s);
std::optional<FeedbackLevel> parse_level(std::string_view s);
std::optional<Modality> parse_modality(std::string_view s);
std::optional<FeedbackKind> parse_kind(std::string_view s);
std::optional<Character> parse_character(std::string_view s);
std::optional<Animation> parse_animation(std::string_view s);
std::optional<Face> parse_face(std::string_view s);

}  // namespace nfb
