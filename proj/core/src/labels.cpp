#include "emphi/labels.hpp"

#include "emphi/common.hpp"

namespace emphi {

const std::array<std::string_view, kNumIntents>& intent_names() {
  static const std::array<std::string_view, kNumIntents> names = {
      "Agreeing",     "Acknowledging", "Encouraging", "Consoling", "Sympathizing",
      "Suggesting",   "Questioning",   "Wishing",     "Neutral"};
  return names;
}

const std::array<std::string_view, kNumEmotions>& emotion_names() {
  static const std::array<std::string_view, kNumEmotions> names = {
      "surprised",  "excited",      "annoyed",    "proud",       "angry",
      "sad",        "grateful",     "lonely",     "impressed",   "afraid",
      "disgusted",  "confident",    "terrified",  "hopeful",     "anxious",
      "disappointed", "joyful",     "prepared",   "guilty",      "furious",
      "nostalgic",  "jealous",      "anticipating", "embarrassed", "content",
      "devastated", "sentimental",  "caring",     "trusting",    "ashamed",
      "apprehensive", "faithful"};
  return names;
}

IntentLabel intent_by_id(int id) {
  if (id < 0 || id >= kNumIntents) throw EmphiError("intent id out of range");
  return IntentLabel{id, intent_names()[static_cast<std::size_t>(id)]};
}

EmotionLabel emotion_by_id(int id) {
  if (id < 0 || id >= kNumEmotions) throw EmphiError("emotion id out of range");
  return EmotionLabel{id, emotion_names()[static_cast<std::size_t>(id)]};
}

std::optional<IntentLabel> intent_by_name(const std::string& name) {
  std::string lc = lowercase_ascii(name);
  const auto& names = intent_names();
  for (int i = 0; i < kNumIntents; ++i) {
    if (lc == lowercase_ascii(std::string(names[static_cast<std::size_t>(i)]))) {
      return IntentLabel{i, names[static_cast<std::size_t>(i)]};
    }
  }
  return std::nullopt;
}

std::optional<EmotionLabel> emotion_by_name(const std::string& name) {
  std::string lc = lowercase_ascii(name);
  const auto& names = emotion_names();
  for (int i = 0; i < kNumEmotions; ++i) {
    if (lc == std::string(names[static_cast<std::size_t>(i)])) {
      return EmotionLabel{i, names[static_cast<std::size_t>(i)]};
    }
  }
  return std::nullopt;
}

}  // namespace emphi
