#include "emphi/corpus.hpp"

#include <algorithm>
#include <iostream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "emphi/common.hpp"
#include "emphi/tokenize.hpp"
#include "emphi/vocab.hpp"

namespace emphi {
namespace {

using json = nlohmann::json;

std::string unescape_commas(std::string s) {
  const std::string needle = "_comma_";
  std::size_t pos = 0;
  while ((pos = s.find(needle, pos)) != std::string::npos) {
    s.replace(pos, needle.size(), ",");
    ++pos;
  }
  return s;
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

struct RawTurn {
  int utterance_idx = 0;
  std::string emotion;
  std::string text;
};

}  // namespace

const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kValid: return "valid";
    case Split::kTest: return "test";
  }
  return "train";
}

std::vector<DialogueExample> load_dialogues(const std::filesystem::path& path, Split split,
                                            LoadStats* stats) {
  namespace fs = std::filesystem;
  fs::path file = path;
  if (fs::is_directory(path)) file = path / (std::string(split_name(split)) + ".csv");
  if (!fs::exists(file)) throw EmphiError("dialogue split file not found: " + file.string());

  auto lines = split_lines(read_text_file(file));
  LoadStats local;

  // Grouped by conv_id in order of first appearance.
  std::vector<std::string> conv_order;
  std::map<std::string, std::vector<RawTurn>> conversations;

  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line.empty()) continue;
    if (i == 0 && line.rfind("conv_id,", 0) == 0) continue;  // header
    auto fields = split_csv_row(line);
    if (fields.size() < 6) {
      ++local.skipped_rows;
      continue;
    }
    RawTurn turn;
    try {
      turn.utterance_idx = std::stoi(fields[1]);
    } catch (const std::exception&) {
      ++local.skipped_rows;
      continue;
    }
    turn.emotion = lowercase_ascii(fields[2]);
    turn.text = unescape_commas(fields[5]);
    if (turn.text.empty()) {
      ++local.skipped_rows;
      continue;
    }
    const std::string& conv_id = fields[0];
    auto it = conversations.find(conv_id);
    if (it == conversations.end()) {
      conv_order.push_back(conv_id);
      it = conversations.emplace(conv_id, std::vector<RawTurn>{}).first;
    }
    it->second.push_back(turn);
  }

  std::vector<DialogueExample> examples;
  for (const auto& conv_id : conv_order) {
    auto& turns = conversations[conv_id];
    std::stable_sort(turns.begin(), turns.end(),
                     [](const RawTurn& a, const RawTurn& b) {
                       return a.utterance_idx < b.utterance_idx;
                     });
    auto emotion = emotion_by_name(turns.front().emotion);
    if (!emotion) {
      ++local.skipped_conversations;
      continue;
    }
    std::vector<Utterance> history;
    for (const auto& turn : turns) {
      Utterance u;
      // Odd utterance indices are the speaker who set the situation,
      // even indices the responding listener.
      u.speaker = (turn.utterance_idx % 2 == 1) ? Speaker::kSpeaker : Speaker::kListener;
      u.text = turn.text;
      u.tokens = tokenize(turn.text);
      if (u.tokens.empty()) continue;
      if (u.speaker == Speaker::kListener && !history.empty() &&
          history.back().speaker == Speaker::kSpeaker) {
        DialogueExample ex;
        ex.context = history;
        ex.response = u;
        ex.emotion = *emotion;
        ex.conversation_id = conv_id;
        examples.push_back(std::move(ex));
      }
      history.push_back(std::move(u));
    }
  }

  if (local.skipped_rows > 0) {
    std::cerr << "warning: skipped " << local.skipped_rows << " malformed rows in "
              << file.string() << "\n";
  }
  if (stats) *stats = local;
  return examples;
}

std::vector<IntentExample> load_intent_corpus(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  if (!fs::exists(path)) throw EmphiError("intent corpus not found: " + path.string());

  std::vector<IntentExample> examples;
  auto add = [&](const std::string& text, const std::string& label) {
    auto intent = intent_by_name(label);
    if (!intent) throw EmphiError("unknown intent label: \"" + label + "\"");
    if (text.empty()) return;
    examples.push_back(IntentExample{text, *intent});
  };

  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (!entry.is_regular_file()) continue;
      auto ext = entry.path().extension().string();
      if (ext == ".txt" || ext == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      std::string label = f.stem().string();
      if (!intent_by_name(label)) {
        throw EmphiError("unknown intent label: \"" + label + "\" (from file " + f.string() + ")");
      }
      for (const auto& line : split_lines(read_text_file(f))) {
        if (!line.empty()) add(unescape_commas(line), label);
      }
    }
  } else {
    auto lines = split_lines(read_text_file(path));
    if (lines.empty()) throw EmphiError("intent corpus is empty: " + path.string());
    // Header row names the columns; fall back to (text, intent) order.
    std::size_t text_col = 0, intent_col = 1, start = 0;
    auto header = split_csv_row(lowercase_ascii(lines[0]));
    bool has_header = false;
    for (std::size_t i = 0; i < header.size(); ++i) {
      const std::string& h = header[i];
      if (h == "intent" || h == "label") {
        intent_col = i;
        has_header = true;
      } else if (h == "text" || h == "response" || h == "utterance" || h == "sentence") {
        text_col = i;
        has_header = true;
      }
    }
    if (has_header) start = 1;
    for (std::size_t i = start; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      auto fields = split_csv_row(lines[i]);
      if (fields.size() <= std::max(text_col, intent_col)) {
        throw EmphiError("malformed intent corpus row: " + lines[i]);
      }
      add(unescape_commas(fields[text_col]), fields[intent_col]);
    }
  }

  if (examples.empty()) throw EmphiError("intent corpus is empty: " + path.string());
  std::array<std::size_t, kNumIntents> counts{};
  for (const auto& ex : examples) ++counts[static_cast<std::size_t>(ex.intent.id)];
  for (int k = 0; k < kNumIntents; ++k) {
    if (counts[static_cast<std::size_t>(k)] == 0) {
      throw EmphiError(std::string("intent corpus has no examples for intent ") +
                       std::string(intent_names()[static_cast<std::size_t>(k)]));
    }
  }
  return examples;
}

NormalizedExample normalize_example(const DialogueExample& ex) {
  NormalizedExample n;
  for (const auto& u : ex.context) n.context.push_back(join_tokens(u.tokens));
  n.response = join_tokens(ex.response.tokens);
  n.emotion = std::string(ex.emotion.name);
  n.conv_id = ex.conversation_id;
  return n;
}

void write_normalized(const std::filesystem::path& p, const std::vector<NormalizedExample>& xs) {
  std::ostringstream ss;
  for (const auto& x : xs) {
    json j;
    j["context"] = x.context;
    j["response"] = x.response;
    j["emotion"] = x.emotion;
    j["conv_id"] = x.conv_id;
    ss << j.dump() << '\n';
  }
  atomic_write_file(p, ss.str());
}

std::vector<NormalizedExample> read_normalized(const std::filesystem::path& p) {
  std::vector<NormalizedExample> xs;
  for (const auto& line : split_lines(read_text_file(p))) {
    if (line.empty()) continue;
    json j = json::parse(line);
    NormalizedExample x;
    x.context = j.at("context").get<std::vector<std::string>>();
    x.response = j.at("response").get<std::string>();
    x.emotion = j.at("emotion").get<std::string>();
    x.conv_id = j.at("conv_id").get<std::string>();
    if (x.context.empty()) throw EmphiError("normalized example with empty context");
    xs.push_back(std::move(x));
  }
  return xs;
}

std::vector<std::string> flatten_context(const std::vector<std::string>& turns,
                                         std::size_t max_tokens) {
  std::vector<std::string> flat;
  for (std::size_t i = 0; i < turns.size(); ++i) {
    if (i) flat.emplace_back(kSepToken);
    for (auto& t : tokenize(turns[i])) flat.push_back(std::move(t));
  }
  if (flat.size() > max_tokens) {
    flat.erase(flat.begin(), flat.end() - static_cast<std::ptrdiff_t>(max_tokens));
  }
  return flat;
}

std::vector<std::string> truncate_response(const std::string& response, std::size_t max_tokens) {
  auto tokens = tokenize(response);
  if (tokens.size() > max_tokens) tokens.resize(max_tokens);
  return tokens;
}

}  // namespace emphi
