#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "emphi/labels.hpp"
#include "emphi/vocab.hpp"

namespace emphi {

enum class Speaker { kSpeaker, kListener };
enum class Split { kTrain, kValid, kTest };

const char* split_name(Split s);

struct Utterance {
  Speaker speaker = Speaker::kSpeaker;
  std::string text;                 // raw
  std::vector<std::string> tokens;  // tokenized form of text
};

/// One (context, response, emotion) instance. The context holds every turn
/// before the listener response, ending on a speaker turn.
struct DialogueExample {
  std::vector<Utterance> context;
  Utterance response;
  EmotionLabel emotion;
  std::string conversation_id;
};

struct IntentExample {
  std::string text;
  IntentLabel intent;
};

struct LoadStats {
  std::size_t skipped_rows = 0;
  std::size_t skipped_conversations = 0;
};

/// Reads the public dialogue CSV layout (conv_id, utterance_idx, context
/// emotion, prompt, speaker_idx, utterance; commas escaped as "_comma_").
/// `path` may be the split file itself or a directory holding
/// {train,valid,test}.csv. One example is emitted per listener turn.
std::vector<DialogueExample> load_dialogues(const std::filesystem::path& path, Split split,
                                            LoadStats* stats = nullptr);

/// Reads a labeled intent-response corpus: either a CSV with a header naming
/// a text column and an intent column, or a directory of <intent>.txt files
/// with one response per line. Unknown intent names are a hard error.
std::vector<IntentExample> load_intent_corpus(const std::filesystem::path& path);

/// Normalized record: tokenized utterances, space-joined.
struct NormalizedExample {
  std::vector<std::string> context;  // one string per turn
  std::string response;
  std::string emotion;
  std::string conv_id;
};

NormalizedExample normalize_example(const DialogueExample& ex);

void write_normalized(const std::filesystem::path& p, const std::vector<NormalizedExample>& xs);
std::vector<NormalizedExample> read_normalized(const std::filesystem::path& p);

/// Flattens context turns into one stream with kSepToken between turns,
/// keeping only the most recent `max_tokens` tokens.
std::vector<std::string> flatten_context(const std::vector<std::string>& turns,
                                         std::size_t max_tokens);

std::vector<std::string> truncate_response(const std::string& response, std::size_t max_tokens);

}  // namespace emphi
