#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <set>

#include "emphi/common.hpp"
#include "emphi/corpus.hpp"
#include "emphi/tokenize.hpp"
#include "emphi/vocab.hpp"
#include "fixtures.hpp"

using namespace emphi;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "emphi-tests" / name;
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("tokenizer lowercases and splits punctuation and contractions") {
  CHECK(tokenize("Hello, World!") == std::vector<std::string>{"hello", ",", "world", "!"});
  CHECK(tokenize("that's don't") == std::vector<std::string>{"that", "'s", "do", "n't"});
  CHECK(tokenize("I'm fine...") == std::vector<std::string>{"i", "'m", "fine", ".", ".", "."});
  CHECK(tokenize("") == std::vector<std::string>{});
  CHECK(tokenize("   ") == std::vector<std::string>{});
}

TEST_CASE("tokenizer is idempotent on its own output") {
  for (const char* text : {"It's a re-run: don't stop!", "weird   spacing\tand\ttabs",
                           "numbers 123 mix3d in", "<sep> stays whole"}) {
    auto once = tokenize(text);
    auto twice = tokenize(join_tokens(once));
    CAPTURE(text);
    CHECK(once == twice);
  }
}

TEST_CASE("vocabulary reserves the special ids and ranks by frequency") {
  std::vector<std::vector<std::string>> seqs = {
      {"b", "a", "a"}, {"a", "c", "b"}, {"c", "d"}};
  auto vocab = Vocabulary::build(seqs, 100, 1);
  CHECK(vocab.token_of(kPadId) == kPadToken);
  CHECK(vocab.token_of(kUnkId) == kUnkToken);
  CHECK(vocab.token_of(kBosId) == kBosToken);
  CHECK(vocab.token_of(kEosId) == kEosToken);
  CHECK(vocab.id_of("a") == 4);  // freq 3
  // b and c tie at 2; lexicographic order breaks it.
  CHECK(vocab.id_of("b") == 5);
  CHECK(vocab.id_of("c") == 6);
  CHECK(vocab.id_of("d") == 7);
  CHECK(vocab.size() == 8);
}

TEST_CASE("vocabulary honors max size and min frequency") {
  std::vector<std::vector<std::string>> seqs = {{"x", "x", "x", "y", "y", "z"}};
  auto small = Vocabulary::build(seqs, 5, 1);
  CHECK(small.size() == 5);
  CHECK(small.contains("x"));
  CHECK_FALSE(small.contains("z"));

  auto filtered = Vocabulary::build(seqs, 100, 2);
  CHECK(filtered.contains("y"));
  CHECK_FALSE(filtered.contains("z"));
  CHECK(filtered.id_of("z") == kUnkId);
  CHECK(filtered.frequency_of("x") == 3);
  CHECK(filtered.frequency_of("z") == 0);
}

TEST_CASE("encode and decode round-trip known tokens") {
  std::vector<std::vector<std::string>> seqs = {{"alpha", "beta", "alpha"}};
  auto vocab = Vocabulary::build(seqs, 100, 1);
  auto ids = vocab.encode({"alpha", "missing", "beta"});
  CHECK(ids == std::vector<int>{vocab.id_of("alpha"), kUnkId, vocab.id_of("beta")});
  auto back = vocab.decode(ids);
  CHECK(back == std::vector<std::string>{"alpha", kUnkToken, "beta"});
  CHECK_THROWS_AS((void)vocab.token_of(vocab.size()), EmphiError);
  CHECK_THROWS_AS((void)vocab.token_of(-1), EmphiError);
}

TEST_CASE("vocabulary save and load preserve ids and hash") {
  auto corpus = fixtures::reply_corpus(40);
  std::vector<std::vector<std::string>> seqs;
  for (const auto& ex : corpus) seqs.push_back(tokenize(ex.text));
  auto vocab = Vocabulary::build(seqs, 500, 1);
  auto path = temp_dir("vocab") / "vocab.txt";
  vocab.save(path);
  auto loaded = Vocabulary::load(path);
  CHECK(loaded.size() == vocab.size());
  CHECK(loaded.content_hash() == vocab.content_hash());
  for (int i = 0; i < vocab.size(); ++i) CHECK(loaded.token_of(i) == vocab.token_of(i));
}

TEST_CASE("dialogue CSVs load into one example per listener turn") {
  auto dir = temp_dir("csv-load");
  auto counts = fixtures::write_dialogue_csvs(dir, 24, 8, 8, 7);
  LoadStats stats;
  auto train = load_dialogues(dir, Split::kTrain, &stats);
  CHECK(static_cast<int>(train.size()) == counts.train);
  CHECK(stats.skipped_rows == 0);
  CHECK(stats.skipped_conversations == 0);
  for (const auto& ex : train) {
    CHECK_FALSE(ex.context.empty());
    CHECK(ex.context.back().speaker == Speaker::kSpeaker);
    CHECK(ex.response.speaker == Speaker::kListener);
    CHECK_FALSE(ex.response.tokens.empty());
  }
  // Four-turn conversations contribute a two-example pair with a growing
  // context.
  bool saw_multiturn = false;
  for (const auto& ex : train) saw_multiturn = saw_multiturn || ex.context.size() == 3;
  CHECK(saw_multiturn);
}

TEST_CASE("malformed rows are skipped and counted") {
  auto dir = temp_dir("csv-bad");
  std::string csv =
      "conv_id,utterance_idx,context,prompt,speaker_idx,utterance\n"
      "c1,1,sad,p,1,i lost my dog today\n"
      "c1,2,sad,p,2,i am so sorry to hear that\n"
      "short,row\n"
      "c2,notanumber,sad,p,1,hello\n"
      "c3,1,sad,p,1,\n"
      "c4,1,notanemotion,p,1,first line\n"
      "c4,2,notanemotion,p,2,second line\n";
  atomic_write_file(dir / "train.csv", csv);
  LoadStats stats;
  auto examples = load_dialogues(dir, Split::kTrain, &stats);
  CHECK(examples.size() == 1);
  CHECK(stats.skipped_rows == 3);
  CHECK(stats.skipped_conversations == 1);
  CHECK(examples[0].emotion.name == "sad");
  CHECK(examples[0].response.text == "i am so sorry to hear that");
}

TEST_CASE("comma escapes are unescaped on load") {
  auto dir = temp_dir("csv-comma");
  std::string csv =
      "conv_id,utterance_idx,context,prompt,speaker_idx,utterance\n"
      "c1,1,sad,p,1,well_comma_ it broke\n"
      "c1,2,sad,p,2,oh no_comma_ i am sorry\n";
  atomic_write_file(dir / "train.csv", csv);
  auto examples = load_dialogues(dir, Split::kTrain, nullptr);
  REQUIRE(examples.size() == 1);
  CHECK(examples[0].context[0].text == "well, it broke");
  CHECK(examples[0].response.text == "oh no, i am sorry");
}

TEST_CASE("missing split files are an error") {
  auto dir = temp_dir("csv-missing");
  CHECK_THROWS_WITH_AS(load_dialogues(dir, Split::kValid, nullptr), doctest::Contains("valid"),
                       EmphiError);
}

TEST_CASE("intent corpus loads from csv with or without a header") {
  auto dir = temp_dir("intent-csv");
  fixtures::write_reply_csv(dir / "replies.csv", 4);
  auto with_header = load_intent_corpus(dir / "replies.csv");
  CHECK(with_header.size() == 4 * kNumIntents);

  std::string headerless;
  for (const auto& ex : with_header) {
    headerless += ex.text + "," + std::string(ex.intent.name) + "\n";
  }
  atomic_write_file(dir / "plain.csv", headerless);
  auto no_header = load_intent_corpus(dir / "plain.csv");
  REQUIRE(no_header.size() == with_header.size());
  for (std::size_t i = 0; i < no_header.size(); ++i) {
    CHECK(no_header[i].text == with_header[i].text);
    CHECK(no_header[i].intent.id == with_header[i].intent.id);
  }
}

TEST_CASE("intent corpus loads from a directory of per-intent files") {
  auto dir = temp_dir("intent-dir");
  for (int z = 0; z < kNumIntents; ++z) {
    std::string name = std::string(intent_names()[static_cast<std::size_t>(z)]) + ".txt";
    atomic_write_file(dir / name, "line one intent " + std::to_string(z) + "\nline two\n");
  }
  auto corpus = load_intent_corpus(dir);
  CHECK(corpus.size() == 2 * kNumIntents);
}

TEST_CASE("intent corpus rejects unknown labels and missing intents") {
  auto dir = temp_dir("intent-bad");
  atomic_write_file(dir / "one.csv", "text,intent\nhello,NotAnIntent\n");
  CHECK_THROWS_WITH_AS(load_intent_corpus(dir / "one.csv"), doctest::Contains("NotAnIntent"),
                       EmphiError);

  atomic_write_file(dir / "two.csv", "text,intent\nhello there,Agreeing\n");
  CHECK_THROWS_WITH_AS(load_intent_corpus(dir / "two.csv"), doctest::Contains("Acknowledging"),
                       EmphiError);
}

TEST_CASE("normalization lowercases via the tokenizer and round-trips") {
  auto dir = temp_dir("normalized");
  auto csv_dir = temp_dir("normalized-src");
  fixtures::write_dialogue_csvs(csv_dir, 12, 2, 2, 3);
  auto raw = load_dialogues(csv_dir, Split::kTrain, nullptr);
  std::vector<NormalizedExample> normalized;
  for (const auto& ex : raw) normalized.push_back(normalize_example(ex));

  for (const auto& n : normalized) {
    REQUIRE_FALSE(n.context.empty());
    CHECK_FALSE(n.response.empty());
    CHECK(emotion_by_name(n.emotion).has_value());
  }

  auto path = dir / "train.jsonl";
  write_normalized(path, normalized);
  auto loaded = read_normalized(path);
  REQUIRE(loaded.size() == normalized.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].context == normalized[i].context);
    CHECK(loaded[i].response == normalized[i].response);
    CHECK(loaded[i].emotion == normalized[i].emotion);
    CHECK(loaded[i].conv_id == normalized[i].conv_id);
  }
}

TEST_CASE("context flattening joins turns with the separator and clips left") {
  auto flat = flatten_context({"a b", "c d"}, 100);
  CHECK(flat == std::vector<std::string>{"a", "b", kSepToken, "c", "d"});

  auto clipped = flatten_context({"a b c", "d e f"}, 4);
  // The most recent tokens survive.
  CHECK(clipped == std::vector<std::string>{kSepToken, "d", "e", "f"});

  auto single = flatten_context({"only turn"}, 100);
  CHECK(single == std::vector<std::string>{"only", "turn"});
}

TEST_CASE("responses truncate on the right") {
  auto tokens = truncate_response("one two three four five", 3);
  CHECK(tokens == std::vector<std::string>{"one", "two", "three"});
  CHECK(truncate_response("", 5).empty());
}

TEST_CASE("fixture dialogue splits mirror the written CSVs") {
  auto dir = temp_dir("split-mirror");
  auto counts = fixtures::write_dialogue_csvs(dir, 16, 4, 4, 11);
  auto from_csv = load_dialogues(dir, Split::kTrain, nullptr);
  auto in_memory = fixtures::dialogue_split("train", 16, 11);
  REQUIRE(static_cast<int>(in_memory.size()) == counts.train);
  REQUIRE(in_memory.size() == from_csv.size());
  for (std::size_t i = 0; i < in_memory.size(); ++i) {
    auto n = normalize_example(from_csv[i]);
    CHECK(n.context == in_memory[i].context);
    CHECK(n.response == in_memory[i].response);
    CHECK(n.emotion == in_memory[i].emotion);
  }
}
