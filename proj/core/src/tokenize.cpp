#include "emphi/tokenize.hpp"

#include <cctype>

namespace emphi {
namespace {

// Common UTF-8 punctuation folded to ASCII before scanning.
std::string normalize_punct(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (c == 0xE2 && i + 2 < text.size()) {
      unsigned char c1 = static_cast<unsigned char>(text[i + 1]);
      unsigned char c2 = static_cast<unsigned char>(text[i + 2]);
      if (c1 == 0x80 && (c2 == 0x98 || c2 == 0x99)) {  // curly single quotes
        out.push_back('\'');
        i += 3;
        continue;
      }
      if (c1 == 0x80 && (c2 == 0x9C || c2 == 0x9D)) {  // curly double quotes
        out.push_back('"');
        i += 3;
        continue;
      }
      if (c1 == 0x80 && (c2 == 0x93 || c2 == 0x94)) {  // dashes
        out.push_back('-');
        i += 3;
        continue;
      }
      if (c1 == 0x80 && c2 == 0xA6) {  // ellipsis
        out += "...";
        i += 3;
        continue;
      }
    }
    out.push_back(static_cast<char>(c));
    ++i;
  }
  return out;
}

bool is_word_char(unsigned char c) {
  return std::isalnum(c) != 0 || c == '\'' || c >= 0x80;
}

void split_contraction(const std::string& word, std::vector<std::string>& out) {
  if (word.find('\'') == std::string::npos || word == "n't") {
    out.push_back(word);
    return;
  }
  // "don't" -> do n't
  if (word.size() > 3 && word.compare(word.size() - 3, 3, "n't") == 0) {
    out.push_back(word.substr(0, word.size() - 3));
    out.push_back("n't");
    return;
  }
  // "that's" -> that 's; a leading apostrophe stays attached ("'s" -> 's)
  std::size_t pos = word.find('\'');
  if (pos == 0) {
    out.push_back(word);
    return;
  }
  out.push_back(word.substr(0, pos));
  out.push_back(word.substr(pos));
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string norm = normalize_punct(text);
  std::string cur;
  auto flush = [&]() {
    if (!cur.empty()) {
      split_contraction(cur, tokens);
      cur.clear();
    }
  };
  for (unsigned char c : norm) {
    if (std::isspace(c)) {
      flush();
    } else if (is_word_char(c)) {
      if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
      cur.push_back(static_cast<char>(c));
    } else {
      flush();
      tokens.emplace_back(1, static_cast<char>(c));
    }
  }
  flush();
  return tokens;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

}  // namespace emphi
