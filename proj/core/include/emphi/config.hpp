#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "emphi/corpus.hpp"
#include "emphi/emphi_model.hpp"
#include "emphi/intent_classifier.hpp"
#include "emphi/nn.hpp"
#include "emphi/training.hpp"
#include "emphi/vocab.hpp"

namespace emphi {

struct PathsConfig {
  std::filesystem::path dialogue_data;  // split csv file or a directory of them
  std::filesystem::path intent_data;    // labeled intent corpus (csv or directory)
  std::filesystem::path work_dir = "work";
  std::filesystem::path keyword_table;  // defaults to <work_dir>/keywords.txt
  std::filesystem::path stopword_file;  // empty: built-in list
  std::filesystem::path vector_file;    // optional pretrained embeddings
};

struct VocabConfig {
  int max_size = 8000;
  int min_freq = 2;
};

struct EvalConfig {
  int samples_per_case = 5;
  int max_cases = 0;  // 0: the whole split
};

struct KeywordConfig {
  int k = 30;
};

/// One configuration file drives every subcommand. Flags override fields;
/// EMPHI_* environment variables override paths only.
struct RunConfig {
  PathsConfig paths;
  ModelConfig model;            // vocab_size is filled from the built vocabulary
  ClassifierConfig classifier;  // likewise
  TrainingConfig training;
  VocabConfig vocab;
  EvalConfig eval;
  KeywordConfig keywords;
  std::uint64_t seed = 1;
};

/// Parses the JSON config. Unknown keys anywhere are an error. Environment
/// overrides: EMPHI_DIALOGUE_DATA, EMPHI_INTENT_DATA, EMPHI_WORK_DIR,
/// EMPHI_KEYWORD_TABLE, EMPHI_STOPWORD_FILE, EMPHI_VECTOR_FILE.
RunConfig load_run_config(const std::filesystem::path& path);

/// Built-in defaults, no file.
RunConfig default_run_config();

/// Applies the EMPHI_* path overrides. load_run_config already calls this.
void apply_path_env_overrides(RunConfig& config);

std::string run_config_to_json(const RunConfig& config);

/// Deterministic sub-seed for a named pipeline stage.
std::uint64_t derive_seed(std::uint64_t master, const std::string& name);

/// "full", "no-intent", "no-gate", or "no-copy".
std::string variant_name(bool disable_intent, bool disable_gate, bool disable_copy);

/// Artifact locations under the work directory.
struct WorkPaths {
  explicit WorkPaths(const RunConfig& config);

  std::filesystem::path work_dir;
  std::filesystem::path keyword_table;

  std::filesystem::path normalized(Split split) const;
  std::filesystem::path vocab_file() const;
  std::filesystem::path prepare_manifest() const;
  std::filesystem::path keyword_manifest() const;
  std::filesystem::path recognition_cache(Split split) const;
  std::filesystem::path classifier_checkpoint() const;
  std::filesystem::path classifier_manifest() const;
  std::filesystem::path model_checkpoint(const std::string& variant) const;
  std::filesystem::path model_manifest(const std::string& variant) const;
  std::filesystem::path train_log(const std::string& variant) const;
  std::filesystem::path report(const std::string& variant) const;
  std::filesystem::path sample_dump(const std::string& variant) const;
  std::filesystem::path response_dump(const std::string& variant) const;
  std::filesystem::path human_responses() const;
  std::filesystem::path audit_output() const;
};

/// Text embedding file: one token per line followed by its vector. Rows of
/// tokens present in the vocabulary are overwritten; everything else keeps
/// its current (random) initialization. Returns the number of rows loaded.
int apply_pretrained_vectors(nn::Tensor& embedding, const Vocabulary& vocab,
                             const std::filesystem::path& file);

}  // namespace emphi
