#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "emphi/common.hpp"
#include "emphi/corpus.hpp"
#include "emphi/labels.hpp"
#include "emphi/nn.hpp"
#include "emphi/vocab.hpp"

namespace emphi {

struct ClassifierConfig {
  int vocab_size = 0;
  int embedding_dim = 300;
  int hidden_dim = 300;
  int ffn_hidden = 300;
  double learning_rate = 1e-3;
  int batch_size = 32;
  int max_epochs = 40;
  double held_out_fraction = 0.1;
  int plateau_patience = 2;
  int max_tokens = 32;
  std::uint64_t seed = 1;
};

struct EncodedIntentExample {
  std::vector<int> ids;
  int label = 0;
};

std::vector<EncodedIntentExample> encode_intent_corpus(const std::vector<IntentExample>& corpus,
                                                       const Vocabulary& vocab, int max_tokens);

struct ClassifierTrainStats {
  std::vector<double> train_loss;
  std::vector<double> held_out_accuracy;
  double final_held_out_accuracy = 0.0;
  int epochs_run = 0;
};

/// 9-way response-intent classifier: single-layer bidirectional GRU over
/// token embeddings, mean-pooled states, two-layer feed-forward head.
/// Serves both as the recognition network (argmax labels for training the
/// generator) and as the audit classifier for generated text.
class IntentClassifier {
 public:
  explicit IntentClassifier(const ClassifierConfig& config);

  const ClassifierConfig& config() const { return config_; }
  long long parameter_count() const { return store_->total_parameters(); }
  nn::ParamStore& params() { return *store_; }

  void init(RngStream& rng);

  /// Probabilities over the nine intents; ids are truncated to max_tokens.
  Eigen::VectorXd classify(const std::vector<int>& ids) const;
  /// One row per input sequence, nine columns.
  Eigen::MatrixXd classify_batch(const std::vector<std::vector<int>>& batch) const;
  /// argmax of classify, ties toward the lower id.
  IntentLabel recognize(const std::vector<int>& ids) const;

  double evaluate_accuracy(const std::vector<EncodedIntentExample>& corpus) const;

  /// Splits off a held-out fraction, minimizes cross-entropy with adaptive
  /// moments, halves the learning rate on training-loss plateau, and keeps
  /// the parameters of the best held-out epoch.
  ClassifierTrainStats train(const std::vector<EncodedIntentExample>& corpus);

  void save(const std::filesystem::path& checkpoint, const std::filesystem::path& manifest,
            const std::string& vocab_hash) const;
  static IntentClassifier load(const std::filesystem::path& checkpoint,
                               const std::filesystem::path& manifest);

  const std::string& vocab_hash() const { return vocab_hash_; }
  double held_out_accuracy() const { return held_out_accuracy_; }

 private:
  ad::Var build_logits(ad::Graph& g, const std::vector<std::vector<int>>& rows) const;

  ClassifierConfig config_;
  std::unique_ptr<nn::ParamStore> store_;
  nn::Tensor* embedding_ = nullptr;
  nn::GruCell fwd_;
  nn::GruCell bwd_;
  nn::Ffn2 head_;
  std::string vocab_hash_;
  double held_out_accuracy_ = 0.0;
};

}  // namespace emphi
