#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <filesystem>
#include <map>
#include <set>

#include "emphi/common.hpp"
#include "emphi/keywords.hpp"
#include "emphi/tokenize.hpp"
#include "fixtures.hpp"

using namespace emphi;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "emphi-tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

// Straight recount of the extractor's inputs, kept independent of its code
// path: per-intent term frequencies over non-stopword tokens.
struct Recount {
  std::array<std::map<std::string, double>, kNumIntents> tf;

  explicit Recount(const std::vector<IntentExample>& corpus) {
    std::array<std::map<std::string, long long>, kNumIntents> counts;
    std::array<long long, kNumIntents> len{};
    for (const auto& ex : corpus) {
      for (const auto& tok : tokenize(ex.text)) {
        if (default_stopwords().count(tok)) continue;
        bool alpha = !tok.empty();
        for (char c : tok) alpha = alpha && ((c >= 'a' && c <= 'z') || c == '\'');
        if (!alpha) continue;
        ++counts[static_cast<std::size_t>(ex.intent.id)][tok];
        ++len[static_cast<std::size_t>(ex.intent.id)];
      }
    }
    for (int z = 0; z < kNumIntents; ++z) {
      auto id = static_cast<std::size_t>(z);
      for (const auto& [tok, c] : counts[id]) {
        tf[id][tok] = static_cast<double>(c) / static_cast<double>(len[id]);
      }
    }
  }

  double of(int z, const std::string& tok) const {
    auto it = tf[static_cast<std::size_t>(z)].find(tok);
    return it == tf[static_cast<std::size_t>(z)].end() ? 0.0 : it->second;
  }
};

}  // namespace

TEST_CASE("default stopword list is pure function words") {
  const auto& sw = default_stopwords();
  CHECK(sw.count("the") == 1);
  CHECK(sw.count("of") == 1);
  CHECK(sw.count("n't") == 1);
  // Words that mark a reply's intent must stay extractable.
  for (const char* w : {"sorry", "hope", "agree", "congratulations", "am", "would", "must",
                        "could", "have", "never", "sure", "oh"}) {
    CAPTURE(w);
    CHECK(sw.count(w) == 0);
  }
}

TEST_CASE("extraction keeps k stopword-free keywords per intent") {
  auto corpus = fixtures::reply_corpus(200);
  auto table = KeywordTable::extract(corpus, 30, default_stopwords());
  CHECK(table.k() == 30);
  for (int z = 0; z < kNumIntents; ++z) {
    const auto& list = table.list(z);
    REQUIRE(list.size() == 30);
    std::set<std::string> seen;
    for (const auto& e : list) {
      CHECK(default_stopwords().count(e.token) == 0);
      CHECK(seen.insert(e.token).second);
    }
  }
}

TEST_CASE("scores are non-increasing within an intent") {
  auto table = KeywordTable::extract(fixtures::reply_corpus(120), 30, default_stopwords());
  for (int z = 0; z < kNumIntents; ++z) {
    const auto& list = table.list(z);
    for (std::size_t i = 1; i < list.size(); ++i) {
      CHECK(list[i - 1].score >= list[i].score);
    }
  }
}

TEST_CASE("every kept keyword is at least as frequent as its mean elsewhere") {
  auto corpus = fixtures::reply_corpus(150);
  auto table = KeywordTable::extract(corpus, 30, default_stopwords());
  Recount rc(corpus);
  for (int z = 0; z < kNumIntents; ++z) {
    for (const auto& e : table.list(z)) {
      double mean_other = 0.0;
      for (int j = 0; j < kNumIntents; ++j) {
        if (j != z) mean_other += rc.of(j, e.token);
      }
      mean_other /= kNumIntents - 1;
      CAPTURE(z);
      CAPTURE(e.token);
      CHECK(rc.of(z, e.token) >= mean_other);
    }
  }
}

TEST_CASE("calibrated corpus surfaces the expected top words") {
  auto table = KeywordTable::extract(fixtures::reply_corpus(610), 30, default_stopwords());
  for (int z = 0; z < kNumIntents; ++z) {
    const auto& expected = fixtures::expected_keywords(z);
    const auto& list = table.list(z);
    int overlap = 0;
    for (std::size_t i = 0; i < 10 && i < list.size(); ++i) {
      if (std::find(expected.begin(), expected.end(), list[i].token) != expected.end()) {
        ++overlap;
      }
    }
    CAPTURE(intent_names()[static_cast<std::size_t>(z)]);
    CHECK(overlap >= 5);
  }
}

TEST_CASE("membership lookups match the lists") {
  auto table = KeywordTable::extract(fixtures::reply_corpus(80), 30, default_stopwords());
  for (int z = 0; z < kNumIntents; ++z) {
    for (const auto& e : table.list(z)) CHECK(table.contains(e.token, z));
  }
  CHECK_FALSE(table.contains("the", 0));
  CHECK_FALSE(table.contains("sorry", -1));
  CHECK_FALSE(table.contains("sorry", kNumIntents));
}

TEST_CASE("save and load round-trip the table bit for bit") {
  auto table = KeywordTable::extract(fixtures::reply_corpus(90), 30, default_stopwords());
  auto path = temp_file("keywords-roundtrip.txt");
  table.save(path);
  auto loaded = KeywordTable::load(path);
  CHECK(loaded.serialize() == table.serialize());
  CHECK(loaded.content_hash() == table.content_hash());
}

TEST_CASE("load rejects tampered tables") {
  auto table = KeywordTable::extract(fixtures::reply_corpus(60), 10, default_stopwords());
  auto path = temp_file("keywords-bad.txt");

  SUBCASE("wrong magic") {
    atomic_write_file(path, "keyword-table v9\nk 10\n");
    CHECK_THROWS_AS(KeywordTable::load(path), EmphiError);
  }
  SUBCASE("unsorted scores") {
    std::string text = "keyword-table v1\nk 2\n";
    for (int z = 0; z < kNumIntents; ++z) {
      text += "intent " + std::string(intent_names()[static_cast<std::size_t>(z)]) + "\n";
      text += "alpha 0.100000000000\nbeta 0.200000000000\n";
    }
    atomic_write_file(path, text);
    CHECK_THROWS_AS(KeywordTable::load(path), EmphiError);
  }
  SUBCASE("missing intents") {
    atomic_write_file(path, "keyword-table v1\nk 2\nintent Agreeing\nalpha 0.5\n");
    CHECK_THROWS_AS(KeywordTable::load(path), EmphiError);
  }
}

TEST_CASE("extraction errors name the problem") {
  std::vector<IntentExample> corpus;
  for (int z = 0; z < kNumIntents - 1; ++z) {
    corpus.push_back(IntentExample{"hello world", intent_by_id(z)});
  }
  CHECK_THROWS_WITH_AS(KeywordTable::extract(corpus, 5, default_stopwords()),
                       doctest::Contains("Neutral"), EmphiError);

  corpus.push_back(IntentExample{"the of and", intent_by_id(kNumIntents - 1)});
  CHECK_THROWS_WITH_AS(KeywordTable::extract(corpus, 5, default_stopwords()),
                       doctest::Contains("stop-word"), EmphiError);

  corpus.back().text = "something useful";
  CHECK_THROWS_AS(KeywordTable::extract(corpus, 0, default_stopwords()), EmphiError);
}

TEST_CASE("stopword files override the built-in list") {
  auto path = temp_file("stopwords.txt");
  atomic_write_file(path, "# comment\nAlpha\nbeta\n\n");
  auto set = load_stopwords(path);
  CHECK(set.size() == 2);
  CHECK(set.count("alpha") == 1);
  CHECK(set.count("beta") == 1);
}
