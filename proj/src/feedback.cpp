#include "nfb/feedback.hpp"

#include <utility>

namespace nfb {

namespace {

template <typename E, std::size_t N>
using NameTable = std::array<std::pair<E, std::string_view>, N>;

template <typename E, std::size_t N>
std::string_view name_of(const NameTable<E, N>& table, E v) {
  for (const auto& [e, name] : table) {
    if (e == v) return name;
  }
  return "?";
}

template <typename E, std::size_t N>
std::optional<E> parse_name(const NameTable<E, N>& table, std::string_view s) {
  for (const auto& [e, name] : table) {
    if (name == s) return e;
  }
  return std::nullopt;
}

constexpr NameTable<PerformanceStage, 3> kStageNames{{
    {PerformanceStage::Low, "low"},
    {PerformanceStage::Medium, "medium"},
    {PerformanceStage::High, "high"},
}};

constexpr NameTable<FeedbackLevel, 4> kLevelNames{{
    {FeedbackLevel::Immediate, "immediate"},
    {FeedbackLevel::Storytelling, "storytelling"},
    {FeedbackLevel::Progress, "progress"},
    {FeedbackLevel::Reinforcing, "reinforcing"},
}};

constexpr NameTable<Modality, 2> kModalityNames{{
    {Modality::Visual, "visual"},
    {Modality::Auditory, "auditory"},
}};

constexpr NameTable<FeedbackKind, 19> kKindNames{{
    {FeedbackKind::BirdHeight, "bird_height"},
    {FeedbackKind::MovementSpeed, "movement_speed"},
    {FeedbackKind::LayRate, "lay_rate"},
    {FeedbackKind::FacialExpression, "facial_expression"},
    {FeedbackKind::MusicTempo, "music_tempo"},
    {FeedbackKind::HeartBubbles, "heart_bubbles"},
    {FeedbackKind::EggStored, "egg_stored"},
    {FeedbackKind::RowHalo, "row_halo"},
    {FeedbackKind::Woohoo, "woohoo"},
    {FeedbackKind::TrayStars, "tray_stars"},
    {FeedbackKind::OhYea, "ohyea"},
    {FeedbackKind::Victory, "victory"},
    {FeedbackKind::StarsAwarded, "stars_awarded"},
    {FeedbackKind::ColoredEgg, "colored_egg"},
    {FeedbackKind::GoldenEgg, "golden_egg"},
    {FeedbackKind::Bubbles, "bubbles"},
    {FeedbackKind::BubbleSound, "bubble_sound"},
    {FeedbackKind::Emoji, "emoji"},
    {FeedbackKind::CoinSound, "coin_sound"},
}};

constexpr NameTable<Character, 2> kCharacterNames{{
    {Character::Boy, "boy"},
    {Character::Girl, "girl"},
}};

constexpr NameTable<Animation, 7> kAnimationNames{{
    {Animation::HeadUpForCatching, "head_up_for_catching"},
    {Animation::CatchingEggs, "catching_eggs"},
    {Animation::TurningWithEggs, "turning_with_eggs"},
    {Animation::HandingOverEggs, "handing_over_eggs"},
    {Animation::ReceivingEggs, "receiving_eggs"},
    {Animation::PuttingDownEggs, "putting_down_eggs"},
    {Animation::TurningBack, "turning_back"},
}};

constexpr NameTable<Face, 5> kFaceNames{{
    {Face::Neutral, "neutral"},
    {Face::Expecting, "expecting"},
    {Face::Smiling, "smiling"},
    {Face::Happy, "happy"},
    {Face::ExtremelyHappy, "extremely_happy"},
}};

}  // namespace

FeedbackCell feedback_cell(FeedbackKind kind) {
  using L = FeedbackLevel;
  using M = Modality;
  switch (kind) {
    case FeedbackKind::BirdHeight:
      return {L::Immediate, M::Visual, "Bird flying height directly mapped to social attention index"};
    case FeedbackKind::MovementSpeed:
      return {L::Storytelling, M::Visual, "Slow, normal, and fast body movements"};
    case FeedbackKind::LayRate:
      return {L::Storytelling, M::Visual, "Slow, normal, and fast egg laying"};
    case FeedbackKind::FacialExpression:
      return {L::Storytelling, M::Visual, "Facial expressions per animation and stage"};
    case FeedbackKind::HeartBubbles:
      return {L::Storytelling, M::Visual, "Heart-shaped bubbles (high stage over 3 seconds)"};
    case FeedbackKind::MusicTempo:
      return {L::Storytelling, M::Auditory, "Low, medium, and high background music tempo"};
    case FeedbackKind::EggStored:
      return {L::Progress, M::Visual, "The number of stored eggs on the carts"};
    case FeedbackKind::RowHalo:
      return {L::Progress, M::Visual, "Colorful halo after a row (5) of eggs"};
    case FeedbackKind::TrayStars:
      return {L::Progress, M::Visual, "Shining stars and light after a tray (30) of eggs"};
    case FeedbackKind::StarsAwarded:
      return {L::Progress, M::Visual, "Stars after game completion"};
    case FeedbackKind::Woohoo:
      return {L::Progress, M::Auditory, "Woohoo sound after a row (5) of eggs"};
    case FeedbackKind::OhYea:
      return {L::Progress, M::Auditory, "Oh Yea sound after a tray (30) of eggs"};
    case FeedbackKind::Victory:
      return {L::Progress, M::Auditory, "Victory drum beats after game completion"};
    case FeedbackKind::ColoredEgg:
      return {L::Reinforcing, M::Visual, "Randomly-colored eggs"};
    case FeedbackKind::GoldenEgg:
      return {L::Reinforcing, M::Visual, "Golden eggs (non-decreasing performance over 3 seconds)"};
    case FeedbackKind::Bubbles:
      return {L::Reinforcing, M::Visual, "Blasting bubbles during eggs being handed over"};
    case FeedbackKind::Emoji:
      return {L::Reinforcing, M::Visual, "Emoji when the characters are facing each other"};
    case FeedbackKind::BubbleSound:
      return {L::Reinforcing, M::Auditory, "Bubble blasting sound"};
    case FeedbackKind::CoinSound:
      return {L::Reinforcing, M::Auditory, "Coin-clicking sound when the characters are facing each other"};
  }
  return {L::Immediate, M::Visual, "?"};
}

bool performs(Character who, Animation animation) {
  switch (animation) {
    case Animation::HeadUpForCatching:
    case Animation::CatchingEggs:
    case Animation::HandingOverEggs:
      return who == Character::Boy;
    case Animation::ReceivingEggs:
    case Animation::PuttingDownEggs:
      return who == Character::Girl;
    case Animation::TurningWithEggs:
    case Animation::TurningBack:
      return true;
  }
  return false;
}

std::optional<Face> face_for(Character who, Animation animation, PerformanceStage stage, bool sustained_high) {
  if (!performs(who, animation)) return std::nullopt;
  if (who == Character::Boy) {
    switch (animation) {
      case Animation::HeadUpForCatching:
        return Face::Expecting;
      case Animation::CatchingEggs:
      case Animation::TurningWithEggs:
      case Animation::HandingOverEggs:
        return stage == PerformanceStage::Low ? Face::Neutral : Face::Happy;
      default:
        return Face::Neutral;
    }
  }
  switch (animation) {
    case Animation::ReceivingEggs:
    case Animation::TurningWithEggs:
      switch (stage) {
        case PerformanceStage::Low:
          return Face::Neutral;
        case PerformanceStage::Medium:
          return Face::Smiling;
        case PerformanceStage::High:
          return sustained_high ? Face::ExtremelyHappy : Face::Happy;
      }
      return Face::Neutral;
    default:
      return Face::Neutral;
  }
}

std::string_view to_string(PerformanceStage v) { return name_of(kStageNames, v); }
std::string_view to_string(FeedbackLevel v) { return name_of(kLevelNames, v); }
std::string_view to_string(Modality v) { return name_of(kModalityNames, v); }
std::string_view to_string(FeedbackKind v) { return name_of(kKindNames, v); }
std::string_view to_string(Character v) { return name_of(kCharacterNames, v); }
std::string_view to_string(Animation v) { return name_of(kAnimationNames, v); }
std::string_view to_string(Face v) { return name_of(kFaceNames, v); }

std::optional<PerformanceStage> parse_stage(std::string_view s) { return parse_name(kStageNames, s); }
std::optional<FeedbackLevel> parse_level(std::string_view s) { return parse_name(kLevelNames, s); }
std::optional<Modality> parse_modality(std::string_view s) { return parse_name(kModalityNames, s); }
std::optional<FeedbackKind> parse_kind(std::string_view s) { return parse_name(kKindNames, s); }
std::optional<Character> parse_character(std::string_view s) { return parse_name(kCharacterNames, s); }
std::optional<Animation> parse_animation(std::string_view s) { return parse_name(kAnimationNames, s); }
std::optional<Face> parse_face(std::string_view s) { return parse_name(kFaceNames, s); }

}  // namespace nfb
