#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <unordered_set>
#include <vector>

#include "emphi/corpus.hpp"
#include "emphi/labels.hpp"

namespace emphi {

struct KeywordEntry {
  std::string token;
  double score = 0.0;
};

/// Fixed list of common function words, applied after lowercasing.
const std::unordered_set<std::string>& default_stopwords();

/// One token per line; '#' starts a comment line.
std::unordered_set<std::string> load_stopwords(const std::filesystem::path& path);

/// Ranked keyword lists, one per intent. Scores are non-increasing within a
/// list, ties ordered lexicographically, no stop words, no duplicates.
class KeywordTable {
 public:
  /// Concatenates each intent's responses into one document, drops stop
  /// words and non-alphabetic tokens, scores tokens by smoothed TF-IDF
  /// (TF = count / document length, IDF = ln(9 / (1 + df)) + 1), keeps
  /// tokens whose in-class relative frequency is at least their mean
  /// relative frequency elsewhere, and takes the top k per intent.
  static KeywordTable extract(const std::vector<IntentExample>& corpus, int k,
                              const std::unordered_set<std::string>& stopwords);

  int k() const { return k_; }

  const std::vector<KeywordEntry>& list(int intent_id) const;
  const std::vector<KeywordEntry>& list(const IntentLabel& intent) const { return list(intent.id); }

  /// O(1) membership query.
  bool contains(const std::string& token, int intent_id) const;
  bool contains(const std::string& token, const IntentLabel& intent) const {
    return contains(token, intent.id);
  }

  void save(const std::filesystem::path& path) const;
  static KeywordTable load(const std::filesystem::path& path);

  std::string serialize() const;
  std::string content_hash() const;

 private:
  void rebuild_members();

  int k_ = 0;
  std::array<std::vector<KeywordEntry>, kNumIntents> lists_;
  std::array<std::unordered_set<std::string>, kNumIntents> members_;
};

KeywordTable extract_keywords(const std::vector<IntentExample>& corpus, int k,
                              const std::unordered_set<std::string>& stopwords);

bool keyword_membership(const KeywordTable& table, const std::string& token,
                        const IntentLabel& intent);

}  // namespace emphi
