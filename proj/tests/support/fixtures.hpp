#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "emphi/corpus.hpp"
#include "emphi/labels.hpp"

namespace emphi::fixtures {

/// Labeled reply corpus with `per_intent` lines per intent, assembled from
/// per-intent template pools. Each intent's replies are built around the ten
/// words its extracted keyword list is expected to surface, plus a rotating
/// tail word for variety, so the corpus is both separable for a classifier
/// and calibrated for keyword extraction.
std::vector<IntentExample> reply_corpus(int per_intent = 610);

/// Same corpus in CSV form (header `text,intent`).
void write_reply_csv(const std::filesystem::path& path, int per_intent = 610);

/// The ten words reply_corpus is calibrated to surface for one intent.
const std::vector<std::string>& expected_keywords(int intent_id);

/// Nine intents over fully disjoint invented vocabularies.
std::vector<IntentExample> separable_corpus(int per_intent = 40);

/// Controllability corpus: per intent, forty replies built around a disjoint
/// twelve-word core, and dialogues pairing every context with replies of
/// every intent so the context never determines the intent.
struct TemplatedCorpus {
  std::vector<IntentExample> replies;        // 9 x 40
  std::vector<NormalizedExample> dialogues;  // 10 contexts x 9 intents x 4
  std::vector<std::string> contexts;         // the 10 context turns
};
TemplatedCorpus templated_corpus();

/// `count` distinct single-turn dialogues over a small closed vocabulary,
/// one deterministic response per context. Example i carries emotion i % 32
/// and a nominal intent of i % 9.
std::vector<NormalizedExample> toy_dialogues(int count = 64);

/// Synthetic dialogue splits in the public CSV layout (conv_id,
/// utterance_idx, context, prompt, speaker_idx, utterance). Speaker turns
/// state an emotion cue; listener replies come from the reply templates of
/// one of two intents plausible for that emotion, drawn 50/50, so a context
/// underdetermines its reply. Every fourth conversation runs four turns.
struct DialogueCounts {
  int train = 0;
  int valid = 0;
  int test = 0;
};
DialogueCounts write_dialogue_csvs(const std::filesystem::path& dir, int train_conversations,
                                   int valid_conversations, int test_conversations,
                                   std::uint64_t seed);

/// One synthetic split as normalized examples, bypassing the CSV files.
/// Matches what loading the corresponding written split would produce.
std::vector<NormalizedExample> dialogue_split(const std::string& split_tag, int conversations,
                                              std::uint64_t seed);

}  // namespace emphi::fixtures
