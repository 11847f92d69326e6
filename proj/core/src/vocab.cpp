#include "emphi/vocab.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "emphi/common.hpp"

namespace emphi {

Vocabulary::Vocabulary() {
  push(kPadToken, 0);
  push(kUnkToken, 0);
  push(kBosToken, 0);
  push(kEosToken, 0);
}

void Vocabulary::push(const std::string& token, std::uint64_t freq) {
  token_to_id_.emplace(token, static_cast<int>(id_to_token_.size()));
  id_to_token_.push_back(token);
  if (freq) frequencies_[token] = freq;
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& sequences,
                             std::size_t max_size, std::uint64_t min_freq) {
  if (max_size <= 4) throw EmphiError("build_vocab: max_size must exceed 4");
  std::map<std::string, std::uint64_t> counts;  // ordered map gives the tie-break
  for (const auto& seq : sequences) {
    for (const auto& tok : seq) ++counts[tok];
  }
  std::vector<std::pair<std::string, std::uint64_t>> ranked;
  ranked.reserve(counts.size());
  for (const auto& [tok, n] : counts) {
    if (n >= min_freq) ranked.emplace_back(tok, n);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary v;
  for (const auto& [tok, n] : ranked) {
    if (v.id_to_token_.size() >= max_size) break;
    if (v.token_to_id_.count(tok)) continue;  // a literal special in the corpus
    v.push(tok, n);
  }
  return v;
}

bool Vocabulary::contains(const std::string& token) const {
  return token_to_id_.count(token) != 0;
}

int Vocabulary::id_of(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token_of(int id) const {
  if (id < 0 || id >= size()) {
    throw EmphiError("decode: token id " + std::to_string(id) + " out of range");
  }
  return id_to_token_[static_cast<std::size_t>(id)];
}

std::uint64_t Vocabulary::frequency_of(const std::string& token) const {
  auto it = frequencies_.find(token);
  return it == frequencies_.end() ? 0 : it->second;
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id_of(t));
  return ids;
}

std::vector<std::string> Vocabulary::decode(const std::vector<int>& ids) const {
  std::vector<std::string> tokens;
  tokens.reserve(ids.size());
  for (int id : ids) tokens.push_back(token_of(id));
  return tokens;
}

void Vocabulary::save(const std::filesystem::path& p) const {
  std::ostringstream ss;
  for (int i = 0; i < size(); ++i) ss << id_to_token_[static_cast<std::size_t>(i)] << '\n';
  atomic_write_file(p, ss.str());
}

Vocabulary Vocabulary::load(const std::filesystem::path& p) {
  auto lines = split_lines(read_text_file(p));
  if (lines.size() < 4 || lines[0] != kPadToken || lines[1] != kUnkToken ||
      lines[2] != kBosToken || lines[3] != kEosToken) {
    throw EmphiError("vocabulary file lacks the 4-line special header: " + p.string());
  }
  Vocabulary v;
  for (std::size_t i = 4; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    if (v.token_to_id_.count(lines[i])) {
      throw EmphiError("duplicate token in vocabulary file: " + lines[i]);
    }
    v.push(lines[i], 0);
  }
  return v;
}

std::string Vocabulary::content_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : id_to_token_) {
    h = fnv1a64(t.data(), t.size()) ^ (h * 0x100000001b3ULL);
  }
  return hash_hex(h);
}

}  // namespace emphi
