#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace emphi {

inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kBosId = 2;
inline constexpr int kEosId = 3;

inline constexpr const char* kPadToken = "<pad>";
inline constexpr const char* kUnkToken = "<unk>";
inline constexpr const char* kBosToken = "<bos>";
inline constexpr const char* kEosToken = "<eos>";

/// Turn separator used when multi-utterance contexts are flattened into one
/// token stream. It is an ordinary corpus token, not a reserved special.
inline constexpr const char* kSepToken = "<sep>";

/// Immutable token<->id bijection. The four specials hold ids 0..3; corpus
/// tokens follow ranked by frequency (lexicographic tie-break).
class Vocabulary {
 public:
  Vocabulary();

  static Vocabulary build(const std::vector<std::vector<std::string>>& sequences,
                          std::size_t max_size, std::uint64_t min_freq);

  int size() const { return static_cast<int>(id_to_token_.size()); }

  bool contains(const std::string& token) const;
  int id_of(const std::string& token) const;  // kUnkId when absent
  const std::string& token_of(int id) const;  // throws on out-of-range
  std::uint64_t frequency_of(const std::string& token) const;  // 0 when absent

  std::vector<int> encode(const std::vector<std::string>& tokens) const;
  std::vector<std::string> decode(const std::vector<int>& ids) const;

  void save(const std::filesystem::path& p) const;
  static Vocabulary load(const std::filesystem::path& p);

  std::string content_hash() const;

 private:
  std::unordered_map<std::string, int> token_to_id_;
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, std::uint64_t> frequencies_;
  void push(const std::string& token, std::uint64_t freq);
};

}  // namespace emphi
