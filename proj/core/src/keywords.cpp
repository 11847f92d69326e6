#include "emphi/keywords.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "emphi/common.hpp"
#include "emphi/tokenize.hpp"

namespace emphi {
namespace {

// Function words only. Content words that routinely carry empathic intent
// (sorry, hope, agree, ...) stay out, as do auxiliaries that double as
// intent markers in casual replies (am, would, must, could, have).
const char* const kStopwords[] = {
    // pronouns and possessives
    "i", "you", "he", "she", "it", "we", "they", "me", "him", "her", "us", "them",
    "my", "your", "his", "its", "our", "their", "mine", "yours", "hers", "ours",
    "theirs", "myself", "yourself", "himself", "herself", "itself", "ourselves",
    "yourselves", "themselves", "this", "that", "these", "those",
    "someone", "anyone", "everyone", "nobody", "anything", "everything", "nothing",
    // determiners
    "a", "an", "the", "some", "any", "each", "every", "either", "neither", "both",
    "few", "more", "most", "other", "such", "no", "only", "own", "same", "all",
    // prepositions
    "in", "on", "at", "by", "for", "with", "about", "against", "between", "into",
    "through", "during", "before", "after", "above", "below", "to", "from", "up",
    "down", "out", "off", "over", "under", "of", "as",
    // conjunctions
    "and", "but", "or", "nor", "so", "yet", "if", "because", "while", "until",
    "than", "though", "although", "whether",
    // question words
    "what", "which", "who", "whom", "whose", "when", "where", "why", "how",
    // auxiliaries
    "is", "are", "was", "were", "be", "been", "being", "do", "does", "did",
    "doing", "has", "had", "having", "will", "shall", "should", "can", "may",
    "might",
    // negation and clitics
    "not", "n't", "'s", "'t", "'m", "'re", "'ve", "'ll", "'d",
    // light adverbs and discourse fillers
    "just", "too", "very", "quite", "also", "then", "there", "here", "now",
    "again", "further", "even", "still", "already", "much", "many", "ever",
    "always", "yes", "yeah", "yep", "okay", "ok",
};

bool is_keyword_shaped(const std::string& t) {
  bool letter = false;
  for (char c : t) {
    if (c >= 'a' && c <= 'z') {
      letter = true;
    } else if (c != '\'') {
      return false;
    }
  }
  return letter;
}

}  // namespace

const std::unordered_set<std::string>& default_stopwords() {
  static const std::unordered_set<std::string> set(std::begin(kStopwords), std::end(kStopwords));
  return set;
}

std::unordered_set<std::string> load_stopwords(const std::filesystem::path& path) {
  std::unordered_set<std::string> set;
  for (const auto& line : split_lines(read_text_file(path))) {
    if (line.empty() || line[0] == '#') continue;
    set.insert(lowercase_ascii(line));
  }
  return set;
}

KeywordTable KeywordTable::extract(const std::vector<IntentExample>& corpus, int k,
                                   const std::unordered_set<std::string>& stopwords) {
  if (k < 1) throw EmphiError("keyword extraction requires k >= 1");

  std::array<std::map<std::string, long long>, kNumIntents> counts;
  std::array<long long, kNumIntents> doc_len{};
  std::array<bool, kNumIntents> seen{};

  for (const auto& ex : corpus) {
    auto id = static_cast<std::size_t>(ex.intent.id);
    seen[id] = true;
    for (const auto& tok : tokenize(ex.text)) {
      if (stopwords.count(tok) || !is_keyword_shaped(tok)) continue;
      ++counts[id][tok];
      ++doc_len[id];
    }
  }

  for (int z = 0; z < kNumIntents; ++z) {
    auto id = static_cast<std::size_t>(z);
    if (!seen[id]) {
      throw EmphiError(std::string("intent corpus has no examples for intent ") +
                       std::string(intent_names()[id]));
    }
    if (doc_len[id] == 0) {
      throw EmphiError(std::string("intent ") + std::string(intent_names()[id]) +
                       " has no tokens left after stop-word removal");
    }
  }

  std::map<std::string, int> df;
  for (const auto& doc : counts) {
    for (const auto& [tok, c] : doc) ++df[tok];
  }

  KeywordTable table;
  table.k_ = k;
  for (int z = 0; z < kNumIntents; ++z) {
    auto id = static_cast<std::size_t>(z);
    std::vector<KeywordEntry> cand;
    for (const auto& [tok, c] : counts[id]) {
      double tf = static_cast<double>(c) / static_cast<double>(doc_len[id]);
      double mean_other = 0.0;
      for (int j = 0; j < kNumIntents; ++j) {
        if (j == z) continue;
        auto jd = static_cast<std::size_t>(j);
        auto it = counts[jd].find(tok);
        if (it != counts[jd].end()) {
          mean_other += static_cast<double>(it->second) / static_cast<double>(doc_len[jd]);
        }
      }
      mean_other /= static_cast<double>(kNumIntents - 1);
      if (tf < mean_other) continue;
      double idf = std::log(static_cast<double>(kNumIntents) / (1.0 + df[tok])) + 1.0;
      cand.push_back(KeywordEntry{tok, tf * idf});
    }
    // Map iteration is lexicographic, so a stable sort on score keeps
    // ties in lexicographic order.
    std::stable_sort(cand.begin(), cand.end(),
                     [](const KeywordEntry& a, const KeywordEntry& b) { return a.score > b.score; });
    if (cand.size() > static_cast<std::size_t>(k)) cand.resize(static_cast<std::size_t>(k));
    table.lists_[id] = std::move(cand);
  }
  table.rebuild_members();
  return table;
}

const std::vector<KeywordEntry>& KeywordTable::list(int intent_id) const {
  if (intent_id < 0 || intent_id >= kNumIntents) {
    throw EmphiError("intent id out of range: " + std::to_string(intent_id));
  }
  return lists_[static_cast<std::size_t>(intent_id)];
}

bool KeywordTable::contains(const std::string& token, int intent_id) const {
  if (intent_id < 0 || intent_id >= kNumIntents) return false;
  return members_[static_cast<std::size_t>(intent_id)].count(token) > 0;
}

void KeywordTable::rebuild_members() {
  for (int z = 0; z < kNumIntents; ++z) {
    auto id = static_cast<std::size_t>(z);
    members_[id].clear();
    for (const auto& e : lists_[id]) members_[id].insert(e.token);
  }
}

std::string KeywordTable::serialize() const {
  std::ostringstream ss;
  ss << "keyword-table v1\n";
  ss << "k " << k_ << "\n";
  for (int z = 0; z < kNumIntents; ++z) {
    ss << "intent " << intent_names()[static_cast<std::size_t>(z)] << "\n";
    for (const auto& e : lists_[static_cast<std::size_t>(z)]) {
      ss << e.token << " " << format_double(e.score, 12) << "\n";
    }
  }
  return ss.str();
}

void KeywordTable::save(const std::filesystem::path& path) const {
  atomic_write_file(path, serialize());
}

KeywordTable KeywordTable::load(const std::filesystem::path& path) {
  auto lines = split_lines(read_text_file(path));
  if (lines.empty() || lines[0] != "keyword-table v1") {
    throw EmphiError("not a keyword table file: " + path.string());
  }
  KeywordTable table;
  std::size_t i = 1;
  if (i >= lines.size() || lines[i].rfind("k ", 0) != 0) {
    throw EmphiError("keyword table missing k line: " + path.string());
  }
  table.k_ = std::stoi(lines[i].substr(2));
  ++i;
  int current = -1;
  for (; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line.empty()) continue;
    if (line.rfind("intent ", 0) == 0) {
      auto intent = intent_by_name(line.substr(7));
      if (!intent) throw EmphiError("unknown intent in keyword table: " + line.substr(7));
      if (intent->id != current + 1) {
        throw EmphiError("keyword table intents out of order at: " + line);
      }
      current = intent->id;
      continue;
    }
    if (current < 0) throw EmphiError("keyword entry before first intent header: " + line);
    auto sep = line.rfind(' ');
    if (sep == std::string::npos || sep == 0) {
      throw EmphiError("malformed keyword line: " + line);
    }
    KeywordEntry e;
    e.token = line.substr(0, sep);
    e.score = std::stod(line.substr(sep + 1));
    auto& list = table.lists_[static_cast<std::size_t>(current)];
    if (!list.empty() && list.back().score < e.score) {
      throw EmphiError("keyword scores not sorted for intent " +
                       std::string(intent_names()[static_cast<std::size_t>(current)]));
    }
    if (static_cast<int>(list.size()) >= table.k_) {
      throw EmphiError("keyword list longer than k for intent " +
                       std::string(intent_names()[static_cast<std::size_t>(current)]));
    }
    list.push_back(std::move(e));
  }
  if (current != kNumIntents - 1) {
    throw EmphiError("keyword table does not cover all intents: " + path.string());
  }
  table.rebuild_members();
  for (int z = 0; z < kNumIntents; ++z) {
    auto id = static_cast<std::size_t>(z);
    if (table.members_[id].size() != table.lists_[id].size()) {
      throw EmphiError("duplicate keyword for intent " + std::string(intent_names()[id]));
    }
  }
  return table;
}

std::string KeywordTable::content_hash() const { return hash_hex(fnv1a64(serialize())); }

KeywordTable extract_keywords(const std::vector<IntentExample>& corpus, int k,
                              const std::unordered_set<std::string>& stopwords) {
  return KeywordTable::extract(corpus, k, stopwords);
}

bool keyword_membership(const KeywordTable& table, const std::string& token,
                        const IntentLabel& intent) {
  return table.contains(token, intent.id);
}

}  // namespace emphi
