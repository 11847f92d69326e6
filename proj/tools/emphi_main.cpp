#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "emphi/config.hpp"
#include "emphi/corpus.hpp"
#include "emphi/evalsuite.hpp"
#include "emphi/keywords.hpp"
#include "emphi/labels.hpp"
#include "emphi/tokenize.hpp"
#include "emphi/training.hpp"
#include "emphi/vocab.hpp"

namespace {

using namespace emphi;
namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) tokens.push_back(std::move(tok));
  return tokens;
}

int argmax_of(const Eigen::VectorXd& v) {
  int best = 0;
  for (int k = 1; k < v.size(); ++k) {
    if (v(k) > v(best)) best = k;
  }
  return best;
}

int guarded(const std::string& sub, const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << sub << ": " << e.what() << std::endl;
    return 1;
  }
}

struct CommonArgs {
  std::string config_path;
  std::string work_dir;
  std::optional<std::uint64_t> seed;
  std::string ablate;
};

void add_common(CLI::App* sub, CommonArgs& args, bool with_ablate) {
  sub->add_option("--config", args.config_path, "JSON configuration file")
      ->check(CLI::ExistingFile);
  sub->add_option("--work-dir", args.work_dir, "artifact directory (overrides the config)");
  sub->add_option("--seed", args.seed, "master seed (overrides the config)");
  if (with_ablate) {
    sub->add_option("--ablate", args.ablate, "drop one mechanism: intent, gate, or copy")
        ->check(CLI::IsMember({"intent", "gate", "copy"}));
  }
}

RunConfig resolve_config(const CommonArgs& args) {
  RunConfig cfg;
  if (args.config_path.empty()) {
    cfg = default_run_config();
    apply_path_env_overrides(cfg);
  } else {
    cfg = load_run_config(args.config_path);
  }
  if (!args.work_dir.empty()) cfg.paths.work_dir = args.work_dir;
  if (args.seed) cfg.seed = *args.seed;
  return cfg;
}

void apply_ablation(const std::string& which, ModelConfig& mc, TrainingConfig& tc) {
  if (which == "intent") mc.disable_intent = tc.disable_intent = true;
  if (which == "gate") mc.disable_gate = tc.disable_gate = true;
  if (which == "copy") mc.disable_copy = tc.disable_copy = true;
}

std::string variant_of(const std::string& ablate) {
  ModelConfig mc;
  TrainingConfig tc;
  apply_ablation(ablate, mc, tc);
  return variant_name(mc.disable_intent, mc.disable_gate, mc.disable_copy);
}

Vocabulary need_vocab(const WorkPaths& wp) {
  if (!fs::exists(wp.vocab_file())) {
    throw EmphiError("vocabulary " + wp.vocab_file().string() + " not found; run prepare-data");
  }
  return Vocabulary::load(wp.vocab_file());
}

std::vector<NormalizedExample> need_normalized(const WorkPaths& wp, Split split) {
  fs::path p = wp.normalized(split);
  if (!fs::exists(p)) {
    throw EmphiError("normalized split " + p.string() + " not found; run prepare-data");
  }
  return read_normalized(p);
}

KeywordTable need_keywords(const WorkPaths& wp) {
  if (!fs::exists(wp.keyword_table)) {
    throw EmphiError("keyword table " + wp.keyword_table.string() +
                     " not found; run extract-keywords");
  }
  return KeywordTable::load(wp.keyword_table);
}

IntentClassifier need_classifier(const WorkPaths& wp) {
  if (!fs::exists(wp.classifier_checkpoint()) || !fs::exists(wp.classifier_manifest())) {
    throw EmphiError("classifier checkpoint " + wp.classifier_checkpoint().string() +
                     " not found; run train-classifier");
  }
  return IntentClassifier::load(wp.classifier_checkpoint(), wp.classifier_manifest());
}

EmphiModel need_model(const WorkPaths& wp, const std::string& ablate) {
  std::string variant = variant_of(ablate);
  fs::path ckpt = wp.model_checkpoint(variant);
  if (!fs::exists(ckpt) || !fs::exists(wp.model_manifest(variant))) {
    std::string hint = ablate.empty() ? "run train" : "run train --ablate " + ablate;
    throw EmphiError("model checkpoint " + ckpt.string() + " not found; " + hint);
  }
  return EmphiModel::load(ckpt, wp.model_manifest(variant));
}

void check_vocab_hash(const std::string& artifact_hash, const Vocabulary& vocab,
                      const char* artifact, const char* producer) {
  if (artifact_hash != vocab.content_hash()) {
    throw EmphiError(std::string(artifact) +
                     " was built against a different vocabulary; rerun " + producer);
  }
}

std::unordered_set<std::string> resolve_stopwords(const RunConfig& cfg) {
  if (cfg.paths.stopword_file.empty()) return default_stopwords();
  return load_stopwords(cfg.paths.stopword_file);
}

void cmd_prepare_data(const CommonArgs& common) {
  RunConfig cfg = resolve_config(common);
  WorkPaths wp(cfg);
  if (cfg.paths.dialogue_data.empty()) {
    throw EmphiError("paths.dialogue_data is not set (config or EMPHI_DIALOGUE_DATA)");
  }
  if (!fs::exists(cfg.paths.dialogue_data)) {
    throw EmphiError("dialogue data " + cfg.paths.dialogue_data.string() + " does not exist");
  }

  json manifest;
  manifest["kind"] = "prepare-data";
  std::vector<std::vector<std::string>> vocab_sequences;
  for (Split split : {Split::kTrain, Split::kValid, Split::kTest}) {
    LoadStats stats;
    auto dialogues = load_dialogues(cfg.paths.dialogue_data, split, &stats);
    if (dialogues.empty()) {
      throw EmphiError(std::string("no dialogues in the ") + split_name(split) + " split");
    }
    std::vector<NormalizedExample> normalized;
    normalized.reserve(dialogues.size());
    for (const auto& d : dialogues) normalized.push_back(normalize_example(d));
    write_normalized(wp.normalized(split), normalized);
    manifest["examples"][split_name(split)] = normalized.size();
    manifest["skipped_rows"][split_name(split)] = stats.skipped_rows;
    if (split == Split::kTrain) {
      for (const auto& ex : normalized) {
        for (const auto& turn : ex.context) vocab_sequences.push_back(split_ws(turn));
        vocab_sequences.push_back(split_ws(ex.response));
      }
    }
    std::cout << split_name(split) << ": " << normalized.size() << " examples -> "
              << wp.normalized(split).string() << "\n";
  }

  Vocabulary vocab = Vocabulary::build(vocab_sequences, cfg.vocab.max_size, cfg.vocab.min_freq);
  vocab.save(wp.vocab_file());
  manifest["vocab_size"] = vocab.size();
  manifest["vocab_hash"] = vocab.content_hash();
  manifest["vocab_max_size"] = cfg.vocab.max_size;
  manifest["vocab_min_freq"] = cfg.vocab.min_freq;
  std::cout << "vocabulary: " << vocab.size() << " tokens -> " << wp.vocab_file().string()
            << "\n";

  // Recognition labels need the trained classifier; cache them now when it
  // is already present and current, otherwise `train` fills the cache.
  bool cached = false;
  if (fs::exists(wp.classifier_checkpoint()) && fs::exists(wp.classifier_manifest())) {
    IntentClassifier clf = need_classifier(wp);
    if (clf.vocab_hash() == vocab.content_hash()) {
      for (Split split : {Split::kTrain, Split::kValid}) {
        auto normalized = read_normalized(wp.normalized(split));
        write_recognition_cache(wp.recognition_cache(split),
                                compute_recognition(normalized, clf, vocab));
      }
      cached = true;
      std::cout << "recognition labels cached for train and valid\n";
    }
  }
  if (!cached) {
    std::cout << "recognition labels deferred to train (classifier not available yet)\n";
  }
  manifest["recognition_cached"] = cached;
  atomic_write_file(wp.prepare_manifest(), manifest.dump(2) + "\n");
  std::cout << "manifest -> " << wp.prepare_manifest().string() << "\n";
}

void cmd_extract_keywords(const CommonArgs& common, std::optional<int> k_flag,
                          const std::string& out_flag) {
  RunConfig cfg = resolve_config(common);
  WorkPaths wp(cfg);
  if (cfg.paths.intent_data.empty()) {
    throw EmphiError("paths.intent_data is not set (config or EMPHI_INTENT_DATA)");
  }
  if (!fs::exists(cfg.paths.intent_data)) {
    throw EmphiError("intent data " + cfg.paths.intent_data.string() + " does not exist");
  }
  int k = k_flag.value_or(cfg.keywords.k);
  if (k < 1) throw EmphiError("k must be positive");
  fs::path out = out_flag.empty() ? wp.keyword_table : fs::path(out_flag);

  auto corpus = load_intent_corpus(cfg.paths.intent_data);
  KeywordTable table = KeywordTable::extract(corpus, k, resolve_stopwords(cfg));
  table.save(out);

  json manifest;
  manifest["kind"] = "keyword-table";
  manifest["k"] = table.k();
  manifest["content_hash"] = table.content_hash();
  manifest["responses"] = corpus.size();
  atomic_write_file(wp.keyword_manifest(), manifest.dump(2) + "\n");

  std::cout << "keywords: " << table.k() << " per intent -> " << out.string() << "\n";
  for (int z = 0; z < kNumIntents; ++z) {
    const auto& list = table.list(z);
    std::cout << "  " << intent_by_id(z).name << ":";
    for (std::size_t i = 0; i < std::min<std::size_t>(5, list.size()); ++i) {
      std::cout << " " << list[i].token;
    }
    std::cout << "\n";
  }
}

void cmd_train_classifier(const CommonArgs& common, std::optional<int> epochs_flag) {
  RunConfig cfg = resolve_config(common);
  WorkPaths wp(cfg);
  if (cfg.paths.intent_data.empty()) {
    throw EmphiError("paths.intent_data is not set (config or EMPHI_INTENT_DATA)");
  }
  Vocabulary vocab = need_vocab(wp);
  auto corpus = load_intent_corpus(cfg.paths.intent_data);
  auto encoded = encode_intent_corpus(corpus, vocab, cfg.classifier.max_tokens);

  ClassifierConfig cc = cfg.classifier;
  cc.vocab_size = vocab.size();
  cc.seed = derive_seed(cfg.seed, "classifier");
  if (epochs_flag) cc.max_epochs = *epochs_flag;

  IntentClassifier clf(cc);
  RngStream init_rng = RngStream::fork(cfg.seed, "classifier.init");
  clf.init(init_rng);
  if (!cfg.paths.vector_file.empty()) {
    int n = apply_pretrained_vectors(clf.params().by_name("cls.embedding"), vocab,
                                     cfg.paths.vector_file);
    std::cout << "pretrained vectors: " << n << " rows loaded\n";
  }
  ClassifierTrainStats stats = clf.train(encoded);
  clf.save(wp.classifier_checkpoint(), wp.classifier_manifest(), vocab.content_hash());

  std::cout << "classifier: " << stats.epochs_run << " epochs, held-out accuracy "
            << format_double(stats.final_held_out_accuracy) << " -> "
            << wp.classifier_checkpoint().string() << "\n";
}

std::vector<EncodedDialogue> load_split_with_recognition(const WorkPaths& wp, Split split,
                                                         const Vocabulary& vocab,
                                                         const ModelConfig& mc) {
  auto normalized = need_normalized(wp, split);
  auto encoded = encode_dialogues(normalized, vocab, mc);
  fs::path cache = wp.recognition_cache(split);
  std::vector<RecognitionLabel> labels;
  if (fs::exists(cache)) {
    labels = read_recognition_cache(cache);
    if (labels.size() != encoded.size()) {
      labels.clear();  // stale cache; recompute below
    }
  }
  if (labels.empty()) {
    IntentClassifier clf = need_classifier(wp);
    check_vocab_hash(clf.vocab_hash(), vocab, "the classifier", "train-classifier");
    labels = compute_recognition(normalized, clf, vocab);
    write_recognition_cache(cache, labels);
    std::cout << "recognition labels cached -> " << cache.string() << "\n";
  }
  attach_recognition(encoded, labels);
  return encoded;
}

void cmd_train(const CommonArgs& common, std::optional<int> epochs_flag,
               std::optional<int> batch_flag, std::optional<double> lr_flag) {
  RunConfig cfg = resolve_config(common);
  WorkPaths wp(cfg);
  Vocabulary vocab = need_vocab(wp);
  KeywordTable table = need_keywords(wp);

  ModelConfig mc = cfg.model;
  mc.vocab_size = vocab.size();
  TrainingConfig tc = cfg.training;
  tc.seed = derive_seed(cfg.seed, "train");
  apply_ablation(common.ablate, mc, tc);
  if (epochs_flag) tc.max_epochs = *epochs_flag;
  if (batch_flag) tc.batch_size = *batch_flag;
  if (lr_flag) tc.learning_rate = *lr_flag;
  std::string variant = variant_name(mc.disable_intent, mc.disable_gate, mc.disable_copy);

  auto train_set = load_split_with_recognition(wp, Split::kTrain, vocab, mc);
  std::vector<EncodedDialogue> valid_set;
  if (fs::exists(wp.normalized(Split::kValid))) {
    valid_set = load_split_with_recognition(wp, Split::kValid, vocab, mc);
  }

  EmphiModel model(mc);
  RngStream init_rng = RngStream::fork(cfg.seed, "model.init");
  model.init(init_rng);
  if (!cfg.paths.vector_file.empty()) {
    int n = apply_pretrained_vectors(model.params().by_name("embedding"), vocab,
                                     cfg.paths.vector_file);
    std::cout << "pretrained vectors: " << n << " rows loaded\n";
  }
  if (mc.mask_copy_to_keywords) {
    model.set_intent_token_mask(EmphiModel::keyword_vocab_mask(table, vocab));
  }

  fs::create_directories(wp.work_dir);
  std::ofstream log(wp.train_log(variant), std::ios::app);
  if (!log) throw EmphiError("cannot open training log " + wp.train_log(variant).string());
  std::cout << "training " << variant << ": " << train_set.size() << " train / "
            << valid_set.size() << " valid examples, " << model.parameter_count()
            << " parameters\n";

  TrainResult result = train_model(model, train_set, valid_set, table, tc, &log);
  model.save(wp.model_checkpoint(variant), wp.model_manifest(variant), vocab.content_hash(),
             table.content_hash(), cfg.seed);

  const EpochRecord& last = result.log.back();
  std::cout << format_epoch_line(last) << "\n";
  if (result.early_stopped) {
    std::cout << "early stop at epoch " << last.epoch << " (best validation "
              << format_double(result.best_validation) << " at epoch " << result.best_epoch
              << ")\n";
  }
  std::cout << "checkpoint -> " << wp.model_checkpoint(variant).string() << "\n";
}

void cmd_evaluate(const CommonArgs& common, std::optional<int> samples_flag,
                  std::optional<int> max_cases_flag) {
  RunConfig cfg = resolve_config(common);
  WorkPaths wp(cfg);
  Vocabulary vocab = need_vocab(wp);
  EmphiModel model = need_model(wp, common.ablate);
  IntentClassifier clf = need_classifier(wp);
  check_vocab_hash(model.vocab_hash(), vocab, "the model", "train");
  check_vocab_hash(clf.vocab_hash(), vocab, "the classifier", "train-classifier");
  std::string variant = variant_of(common.ablate);
  if (model.config().mask_copy_to_keywords) {
    KeywordTable table = need_keywords(wp);
    if (table.content_hash() != model.keyword_hash()) {
      throw EmphiError("keyword table changed since the model was trained; rerun train");
    }
    model.set_intent_token_mask(EmphiModel::keyword_vocab_mask(table, vocab));
  }

  auto normalized = need_normalized(wp, Split::kTest);
  ModelConfig mc = model.config();
  auto encoded = encode_dialogues(normalized, vocab, mc);
  std::vector<std::vector<int>> contexts;
  std::vector<TokenSeq> references;
  std::size_t dropped = 0;
  for (const auto& ex : encoded) {
    if (ex.response_tokens.empty()) {
      ++dropped;
      continue;
    }
    contexts.push_back(ex.context_ids);
    references.push_back(ex.response_tokens);
  }
  if (dropped) std::cout << dropped << " test cases dropped for empty references\n";
  int max_cases = max_cases_flag.value_or(cfg.eval.max_cases);
  if (max_cases > 0 && static_cast<int>(contexts.size()) > max_cases) {
    contexts.resize(max_cases);
    references.resize(max_cases);
  }
  int samples = samples_flag.value_or(cfg.eval.samples_per_case);

  RngStream rng = RngStream::fork(cfg.seed, "evaluate");
  std::vector<std::vector<TokenSeq>> groups;
  EvalReport report = evaluate_model(model, clf, contexts, references, vocab, samples,
                                     mc.max_response_tokens, rng, &groups);

  std::string text = format_report(report);
  atomic_write_file(wp.report(variant), text);
  write_sample_file(wp.sample_dump(variant), groups);
  std::vector<TokenSeq> first_samples;
  for (const auto& g : groups) first_samples.push_back(g.front());
  write_response_file(wp.response_dump(variant), first_samples);
  write_response_file(wp.human_responses(), references);

  std::cout << text;
  std::cout << "report -> " << wp.report(variant).string() << "\n";
}

void cmd_audit_bias(const CommonArgs& common, const std::string& model_file,
                    const std::string& human_file) {
  RunConfig cfg = resolve_config(common);
  WorkPaths wp(cfg);
  Vocabulary vocab = need_vocab(wp);
  IntentClassifier clf = need_classifier(wp);
  check_vocab_hash(clf.vocab_hash(), vocab, "the classifier", "train-classifier");

  AuditResult result = audit_bias(model_file, human_file, clf, vocab);
  if (!result.warning.empty()) std::cerr << "warning: " << result.warning << "\n";
  std::string text = format_audit(result);
  atomic_write_file(wp.audit_output(), text);
  std::cout << text;
  std::cout << "audit -> " << wp.audit_output().string() << "\n";
}

void print_intent_rows(const Eigen::VectorXd& prior) {
  std::vector<int> order(kNumIntents);
  for (int k = 0; k < kNumIntents; ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return prior(a) > prior(b); });
  for (int k : order) {
    std::cout << "  " << std::left << std::setw(18) << intent_by_id(k).name
              << format_double(prior(k)) << "\n";
  }
}

void cmd_chat(const CommonArgs& common) {
  RunConfig cfg = resolve_config(common);
  WorkPaths wp(cfg);
  Vocabulary vocab = need_vocab(wp);
  EmphiModel model = need_model(wp, common.ablate);
  IntentClassifier clf = need_classifier(wp);
  check_vocab_hash(model.vocab_hash(), vocab, "the model", "train");
  check_vocab_hash(clf.vocab_hash(), vocab, "the classifier", "train-classifier");
  if (model.config().mask_copy_to_keywords) {
    KeywordTable table = need_keywords(wp);
    model.set_intent_token_mask(EmphiModel::keyword_vocab_mask(table, vocab));
  }
  const ModelConfig& mc = model.config();

  RngStream rng = RngStream::fork(cfg.seed, "chat");
  std::vector<int> last_context;

  auto respond = [&](std::optional<int> intent_id) {
    auto out = model.generate(last_context, intent_id, mc.max_response_tokens, 1, rng);
    const GeneratedResponse& r = out[0];
    std::vector<int> ids = r.token_ids.empty() ? std::vector<int>{kUnkId} : r.token_ids;
    IntentLabel label = clf.recognize(ids);
    std::cout << "response [intent " << intent_by_id(r.intent_id).name << ", classified "
              << label.name << "]: " << join_tokens(vocab.decode(r.token_ids)) << "\n";
  };

  std::cout << "interactive probe. type a message; /intent <name> reruns the last message"
               " under that intent; /quit exits.\n";
  std::string line;
  while (std::cout << "> " << std::flush, std::getline(std::cin, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    if (line == "/quit") break;
    if (line.rfind("/intent", 0) == 0) {
      std::string name = line.size() > 7 ? line.substr(8) : "";
      auto label = intent_by_name(name);
      if (!label) {
        std::cout << "unknown intent '" << name << "'; valid names:";
        for (int k = 0; k < kNumIntents; ++k) std::cout << " " << intent_by_id(k).name;
        std::cout << "\n";
        continue;
      }
      if (last_context.empty()) {
        std::cout << "enter a message first\n";
        continue;
      }
      respond(label->id);
      continue;
    }
    if (line.front() == '/') {
      std::cout << "unknown command; use /intent <name> or /quit\n";
      continue;
    }

    auto tokens = tokenize(line);
    if (tokens.empty()) continue;
    if (static_cast<int>(tokens.size()) > mc.max_context_tokens) {
      tokens.erase(tokens.begin(),
                   tokens.end() - static_cast<std::ptrdiff_t>(mc.max_context_tokens));
    }
    last_context = vocab.encode(tokens);

    EncoderOutput enc = model.encode_context(last_context);
    Eigen::VectorXd prior = model.prior_intent(enc);
    Eigen::VectorXd emotion = model.classify_emotion(enc);
    std::cout << "intent distribution:\n";
    print_intent_rows(prior);
    std::cout << "predicted emotion: " << emotion_by_id(argmax_of(emotion)).name << "\n";
    respond(std::nullopt);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"empathetic response generation pipeline"};
  app.require_subcommand(1);
  int rc = 0;

  CommonArgs prep_args;
  auto* prep = app.add_subcommand("prepare-data",
                                  "normalize the dialogue corpus and build the vocabulary");
  add_common(prep, prep_args, false);
  prep->callback([&] { rc = guarded("prepare-data", [&] { cmd_prepare_data(prep_args); }); });

  CommonArgs kw_args;
  std::optional<int> kw_k;
  std::string kw_out;
  auto* kw = app.add_subcommand("extract-keywords", "build the per-intent keyword table");
  add_common(kw, kw_args, false);
  kw->add_option("--k", kw_k, "keywords per intent");
  kw->add_option("--out", kw_out, "output path for the table");
  kw->callback(
      [&] { rc = guarded("extract-keywords", [&] { cmd_extract_keywords(kw_args, kw_k, kw_out); }); });

  CommonArgs clf_args;
  std::optional<int> clf_epochs;
  auto* clf = app.add_subcommand("train-classifier", "train the response-intent classifier");
  add_common(clf, clf_args, false);
  clf->add_option("--max-epochs", clf_epochs, "epoch cap (overrides the config)");
  clf->callback(
      [&] { rc = guarded("train-classifier", [&] { cmd_train_classifier(clf_args, clf_epochs); }); });

  CommonArgs train_args;
  std::optional<int> train_epochs;
  std::optional<int> train_batch;
  std::optional<double> train_lr;
  auto* train = app.add_subcommand("train", "train the generator");
  add_common(train, train_args, true);
  train->add_option("--max-epochs", train_epochs, "epoch cap (overrides the config)");
  train->add_option("--batch-size", train_batch, "batch size (overrides the config)");
  train->add_option("--lr", train_lr, "learning rate (overrides the config)");
  train->callback([&] {
    rc = guarded("train", [&] { cmd_train(train_args, train_epochs, train_batch, train_lr); });
  });

  CommonArgs eval_args;
  std::optional<int> eval_samples;
  std::optional<int> eval_max_cases;
  auto* eval = app.add_subcommand("evaluate", "score the test split and write the report");
  add_common(eval, eval_args, true);
  eval->add_option("--samples", eval_samples, "generations per context (overrides the config)");
  eval->add_option("--max-cases", eval_max_cases, "cap on test cases (overrides the config)");
  eval->callback([&] {
    rc = guarded("evaluate", [&] { cmd_evaluate(eval_args, eval_samples, eval_max_cases); });
  });

  CommonArgs audit_args;
  std::string audit_model_file;
  std::string audit_human_file;
  auto* audit = app.add_subcommand("audit-bias",
                                   "compare intent histograms of two response files");
  add_common(audit, audit_args, false);
  audit->add_option("--model-file", audit_model_file, "model response file")
      ->required()
      ->check(CLI::ExistingFile);
  audit->add_option("--human-file", audit_human_file, "human response file")
      ->required()
      ->check(CLI::ExistingFile);
  audit->callback([&] {
    rc = guarded("audit-bias",
                 [&] { cmd_audit_bias(audit_args, audit_model_file, audit_human_file); });
  });

  CommonArgs chat_args;
  auto* chat = app.add_subcommand("chat", "interactive probe of a trained model");
  add_common(chat, chat_args, true);
  chat->callback([&] { rc = guarded("chat", [&] { cmd_chat(chat_args); }); });

  CLI11_PARSE(app, argc, argv);
  return rc;
}
