#include "emphi/config.hpp"

#include <cstdlib>
#include <initializer_list>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace emphi {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const char* where, std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw EmphiError("unknown config key '" + item.key() + "' in " + where);
    }
  }
}

template <typename T>
void read_into(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

void read_path(const json& obj, const char* key, std::filesystem::path& out) {
  if (obj.contains(key)) out = std::filesystem::path(obj.at(key).get<std::string>());
}

void env_path_override(const char* name, std::filesystem::path& out) {
  if (const char* v = std::getenv(name); v && *v) out = std::filesystem::path(v);
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0)) throw EmphiError(std::string(what) + " must be positive");
}

void require_positive(int v, const char* what) {
  if (v < 1) throw EmphiError(std::string(what) + " must be positive");
}

}  // namespace

RunConfig default_run_config() { return RunConfig{}; }

void apply_path_env_overrides(RunConfig& c) {
  env_path_override("EMPHI_DIALOGUE_DATA", c.paths.dialogue_data);
  env_path_override("EMPHI_INTENT_DATA", c.paths.intent_data);
  env_path_override("EMPHI_WORK_DIR", c.paths.work_dir);
  env_path_override("EMPHI_KEYWORD_TABLE", c.paths.keyword_table);
  env_path_override("EMPHI_STOPWORD_FILE", c.paths.stopword_file);
  env_path_override("EMPHI_VECTOR_FILE", c.paths.vector_file);
}

RunConfig load_run_config(const std::filesystem::path& path) {
  json root;
  try {
    root = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw EmphiError("cannot parse config " + path.string() + ": " + e.what());
  }
  if (!root.is_object()) throw EmphiError("config " + path.string() + " must be a JSON object");

  RunConfig c;
  try {
    check_keys(root, "the top level",
               {"paths", "model", "classifier", "training", "vocab", "eval", "keywords", "seed"});

    if (root.contains("paths")) {
      const json& p = root.at("paths");
      check_keys(p, "paths",
                 {"dialogue_data", "intent_data", "work_dir", "keyword_table", "stopword_file",
                  "vector_file"});
      read_path(p, "dialogue_data", c.paths.dialogue_data);
      read_path(p, "intent_data", c.paths.intent_data);
      read_path(p, "work_dir", c.paths.work_dir);
      read_path(p, "keyword_table", c.paths.keyword_table);
      read_path(p, "stopword_file", c.paths.stopword_file);
      read_path(p, "vector_file", c.paths.vector_file);
    }
    if (root.contains("model")) {
      const json& m = root.at("model");
      check_keys(m, "model",
                 {"embedding_dim", "encoder_hidden", "encoder_layers", "decoder_hidden",
                  "decoder_layers", "intent_embedding_dim", "emotion_embedding_dim", "ffn_hidden",
                  "attention_dim", "max_context_tokens", "max_response_tokens",
                  "mask_copy_to_keywords"});
      read_into(m, "embedding_dim", c.model.embedding_dim);
      read_into(m, "encoder_hidden", c.model.encoder_hidden);
      read_into(m, "encoder_layers", c.model.encoder_layers);
      read_into(m, "decoder_hidden", c.model.decoder_hidden);
      read_into(m, "decoder_layers", c.model.decoder_layers);
      read_into(m, "intent_embedding_dim", c.model.intent_embedding_dim);
      read_into(m, "emotion_embedding_dim", c.model.emotion_embedding_dim);
      read_into(m, "ffn_hidden", c.model.ffn_hidden);
      read_into(m, "attention_dim", c.model.attention_dim);
      read_into(m, "max_context_tokens", c.model.max_context_tokens);
      read_into(m, "max_response_tokens", c.model.max_response_tokens);
      read_into(m, "mask_copy_to_keywords", c.model.mask_copy_to_keywords);
    }
    if (root.contains("classifier")) {
      const json& l = root.at("classifier");
      check_keys(l, "classifier",
                 {"embedding_dim", "hidden_dim", "ffn_hidden", "learning_rate", "batch_size",
                  "max_epochs", "held_out_fraction", "plateau_patience", "max_tokens"});
      read_into(l, "embedding_dim", c.classifier.embedding_dim);
      read_into(l, "hidden_dim", c.classifier.hidden_dim);
      read_into(l, "ffn_hidden", c.classifier.ffn_hidden);
      read_into(l, "learning_rate", c.classifier.learning_rate);
      read_into(l, "batch_size", c.classifier.batch_size);
      read_into(l, "max_epochs", c.classifier.max_epochs);
      read_into(l, "held_out_fraction", c.classifier.held_out_fraction);
      read_into(l, "plateau_patience", c.classifier.plateau_patience);
      read_into(l, "max_tokens", c.classifier.max_tokens);
    }
    if (root.contains("training")) {
      const json& t = root.at("training");
      check_keys(t, "training",
                 {"lambda1", "lambda2", "lambda3", "lambda4", "learning_rate", "batch_size",
                  "max_epochs", "patience"});
      read_into(t, "lambda1", c.training.lambda1);
      read_into(t, "lambda2", c.training.lambda2);
      read_into(t, "lambda3", c.training.lambda3);
      read_into(t, "lambda4", c.training.lambda4);
      read_into(t, "learning_rate", c.training.learning_rate);
      read_into(t, "batch_size", c.training.batch_size);
      read_into(t, "max_epochs", c.training.max_epochs);
      read_into(t, "patience", c.training.patience);
    }
    if (root.contains("vocab")) {
      const json& v = root.at("vocab");
      check_keys(v, "vocab", {"max_size", "min_freq"});
      read_into(v, "max_size", c.vocab.max_size);
      read_into(v, "min_freq", c.vocab.min_freq);
    }
    if (root.contains("eval")) {
      const json& e = root.at("eval");
      check_keys(e, "eval", {"samples_per_case", "max_cases"});
      read_into(e, "samples_per_case", c.eval.samples_per_case);
      read_into(e, "max_cases", c.eval.max_cases);
    }
    if (root.contains("keywords")) {
      const json& k = root.at("keywords");
      check_keys(k, "keywords", {"k"});
      read_into(k, "k", c.keywords.k);
    }
    read_into(root, "seed", c.seed);
  } catch (const json::exception& e) {
    throw EmphiError("bad value in config " + path.string() + ": " + e.what());
  }

  apply_path_env_overrides(c);

  require_positive(c.model.embedding_dim, "model.embedding_dim");
  require_positive(c.model.encoder_hidden, "model.encoder_hidden");
  require_positive(c.model.encoder_layers, "model.encoder_layers");
  require_positive(c.model.decoder_hidden, "model.decoder_hidden");
  require_positive(c.model.decoder_layers, "model.decoder_layers");
  require_positive(c.model.intent_embedding_dim, "model.intent_embedding_dim");
  require_positive(c.model.emotion_embedding_dim, "model.emotion_embedding_dim");
  require_positive(c.model.ffn_hidden, "model.ffn_hidden");
  require_positive(c.model.attention_dim, "model.attention_dim");
  require_positive(c.model.max_context_tokens, "model.max_context_tokens");
  require_positive(c.model.max_response_tokens, "model.max_response_tokens");
  if (c.training.lambda1 < 0 || c.training.lambda2 < 0 || c.training.lambda3 < 0 ||
      c.training.lambda4 < 0) {
    throw EmphiError("training loss weights must be nonnegative");
  }
  require_positive(c.training.learning_rate, "training.learning_rate");
  require_positive(c.training.batch_size, "training.batch_size");
  require_positive(c.training.max_epochs, "training.max_epochs");
  require_positive(c.training.patience, "training.patience");
  require_positive(c.vocab.max_size, "vocab.max_size");
  require_positive(c.vocab.min_freq, "vocab.min_freq");
  require_positive(c.eval.samples_per_case, "eval.samples_per_case");
  if (c.eval.max_cases < 0) throw EmphiError("eval.max_cases must be nonnegative");
  require_positive(c.keywords.k, "keywords.k");

  for (const auto& [p, what] :
       {std::pair{&c.paths.stopword_file, "paths.stopword_file"},
        std::pair{&c.paths.vector_file, "paths.vector_file"}}) {
    if (!p->empty() && !std::filesystem::exists(*p)) {
      throw EmphiError(std::string(what) + " does not exist: " + p->string());
    }
  }
  return c;
}

std::string run_config_to_json(const RunConfig& c) {
  json root;
  root["paths"] = {{"dialogue_data", c.paths.dialogue_data.string()},
                   {"intent_data", c.paths.intent_data.string()},
                   {"work_dir", c.paths.work_dir.string()},
                   {"keyword_table", c.paths.keyword_table.string()},
                   {"stopword_file", c.paths.stopword_file.string()},
                   {"vector_file", c.paths.vector_file.string()}};
  root["model"] = {{"embedding_dim", c.model.embedding_dim},
                   {"encoder_hidden", c.model.encoder_hidden},
                   {"encoder_layers", c.model.encoder_layers},
                   {"decoder_hidden", c.model.decoder_hidden},
                   {"decoder_layers", c.model.decoder_layers},
                   {"intent_embedding_dim", c.model.intent_embedding_dim},
                   {"emotion_embedding_dim", c.model.emotion_embedding_dim},
                   {"ffn_hidden", c.model.ffn_hidden},
                   {"attention_dim", c.model.attention_dim},
                   {"max_context_tokens", c.model.max_context_tokens},
                   {"max_response_tokens", c.model.max_response_tokens},
                   {"mask_copy_to_keywords", c.model.mask_copy_to_keywords}};
  root["classifier"] = {{"embedding_dim", c.classifier.embedding_dim},
                        {"hidden_dim", c.classifier.hidden_dim},
                        {"ffn_hidden", c.classifier.ffn_hidden},
                        {"learning_rate", c.classifier.learning_rate},
                        {"batch_size", c.classifier.batch_size},
                        {"max_epochs", c.classifier.max_epochs},
                        {"held_out_fraction", c.classifier.held_out_fraction},
                        {"plateau_patience", c.classifier.plateau_patience},
                        {"max_tokens", c.classifier.max_tokens}};
  root["training"] = {{"lambda1", c.training.lambda1},
                      {"lambda2", c.training.lambda2},
                      {"lambda3", c.training.lambda3},
                      {"lambda4", c.training.lambda4},
                      {"learning_rate", c.training.learning_rate},
                      {"batch_size", c.training.batch_size},
                      {"max_epochs", c.training.max_epochs},
                      {"patience", c.training.patience}};
  root["vocab"] = {{"max_size", c.vocab.max_size}, {"min_freq", c.vocab.min_freq}};
  root["eval"] = {{"samples_per_case", c.eval.samples_per_case},
                  {"max_cases", c.eval.max_cases}};
  root["keywords"] = {{"k", c.keywords.k}};
  root["seed"] = c.seed;
  return root.dump(2) + "\n";
}

std::uint64_t derive_seed(std::uint64_t master, const std::string& name) {
  return RngStream::fork(master, name).next_u64();
}

std::string variant_name(bool disable_intent, bool disable_gate, bool disable_copy) {
  std::string name;
  if (disable_intent) name = "no-intent";
  if (disable_gate) name += (name.empty() ? "" : "-") + std::string("no-gate");
  if (disable_copy) name += (name.empty() ? "" : "-") + std::string("no-copy");
  return name.empty() ? "full" : name;
}

WorkPaths::WorkPaths(const RunConfig& config) : work_dir(config.paths.work_dir) {
  keyword_table =
      config.paths.keyword_table.empty() ? work_dir / "keywords.txt" : config.paths.keyword_table;
}

std::filesystem::path WorkPaths::normalized(Split split) const {
  return work_dir / "normalized" / (std::string(split_name(split)) + ".jsonl");
}
std::filesystem::path WorkPaths::vocab_file() const { return work_dir / "vocab.txt"; }
std::filesystem::path WorkPaths::prepare_manifest() const { return work_dir / "prepare.json"; }
std::filesystem::path WorkPaths::keyword_manifest() const { return work_dir / "keywords.json"; }
std::filesystem::path WorkPaths::recognition_cache(Split split) const {
  return work_dir / ("recognition-" + std::string(split_name(split)) + ".txt");
}
std::filesystem::path WorkPaths::classifier_checkpoint() const {
  return work_dir / "classifier.bin";
}
std::filesystem::path WorkPaths::classifier_manifest() const {
  return work_dir / "classifier.json";
}
std::filesystem::path WorkPaths::model_checkpoint(const std::string& variant) const {
  return work_dir / ("model-" + variant + ".bin");
}
std::filesystem::path WorkPaths::model_manifest(const std::string& variant) const {
  return work_dir / ("model-" + variant + ".json");
}
std::filesystem::path WorkPaths::train_log(const std::string& variant) const {
  return work_dir / ("train-" + variant + ".log");
}
std::filesystem::path WorkPaths::report(const std::string& variant) const {
  return work_dir / ("report-" + variant + ".txt");
}
std::filesystem::path WorkPaths::sample_dump(const std::string& variant) const {
  return work_dir / ("samples-" + variant + ".txt");
}
std::filesystem::path WorkPaths::response_dump(const std::string& variant) const {
  return work_dir / ("responses-" + variant + ".txt");
}
std::filesystem::path WorkPaths::human_responses() const {
  return work_dir / "responses-human.txt";
}
std::filesystem::path WorkPaths::audit_output() const { return work_dir / "audit.txt"; }

int apply_pretrained_vectors(nn::Tensor& embedding, const Vocabulary& vocab,
                             const std::filesystem::path& file) {
  const Eigen::Index dim = embedding.value.cols();
  if (embedding.value.rows() != vocab.size()) {
    throw EmphiError("embedding table and vocabulary disagree on size");
  }
  int loaded = 0;
  std::size_t line_no = 0;
  for (const std::string& line : split_lines(read_text_file(file))) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string token;
    is >> token;
    if (!vocab.contains(token)) continue;
    int id = vocab.id_of(token);
    for (Eigen::Index j = 0; j < dim; ++j) {
      double v;
      if (!(is >> v)) {
        throw EmphiError("vector file line " + std::to_string(line_no) + " holds fewer than " +
                         std::to_string(dim) + " values");
      }
      embedding.value(id, j) = v;
    }
    double extra;
    if (is >> extra) {
      throw EmphiError("vector file line " + std::to_string(line_no) + " holds more than " +
                       std::to_string(dim) + " values");
    }
    ++loaded;
  }
  return loaded;
}

}  // namespace emphi
