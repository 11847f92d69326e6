#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace emphi {

inline constexpr int kNumIntents = 9;
inline constexpr int kNumEmotions = 32;

/// One of the nine listener strategies. Ids are fixed by canonical order.
struct IntentLabel {
  int id = 0;
  std::string_view name;
};

/// One of the thirty-two conversation emotions.
struct EmotionLabel {
  int id = 0;
  std::string_view name;
};

const std::array<std::string_view, kNumIntents>& intent_names();
const std::array<std::string_view, kNumEmotions>& emotion_names();

IntentLabel intent_by_id(int id);
EmotionLabel emotion_by_id(int id);

/// Case-insensitive lookup; nullopt for unknown names.
std::optional<IntentLabel> intent_by_name(const std::string& name);
std::optional<EmotionLabel> emotion_by_name(const std::string& name);

}  // namespace emphi
