#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "emphi/common.hpp"
#include "emphi/corpus.hpp"
#include "emphi/emphi_model.hpp"
#include "emphi/intent_classifier.hpp"
#include "emphi/keywords.hpp"
#include "emphi/vocab.hpp"

namespace emphi {

struct TrainingConfig {
  double lambda1 = 1.0;
  double lambda2 = 0.5;
  double lambda3 = 0.5;
  double lambda4 = 1.0;
  double learning_rate = 1e-4;
  int batch_size = 16;
  int max_epochs = 20;
  int patience = 3;
  std::uint64_t seed = 1;
  bool disable_intent = false;
  bool disable_gate = false;
  bool disable_copy = false;
};

/// Loss weights as applied: disable_intent zeroes the KL and copy weights,
/// disable_copy zeroes the copy weight.
std::array<double, 4> effective_lambdas(const TrainingConfig& config);

/// Output of the frozen response classifier for one gold response.
struct RecognitionLabel {
  Eigen::VectorXd distribution;  // nine probabilities
  int intent_id = 0;             // argmax, ties toward the lower id
};

std::vector<RecognitionLabel> compute_recognition(const std::vector<NormalizedExample>& examples,
                                                  const IntentClassifier& classifier,
                                                  const Vocabulary& vocab);

void write_recognition_cache(const std::filesystem::path& path,
                             const std::vector<RecognitionLabel>& labels);
std::vector<RecognitionLabel> read_recognition_cache(const std::filesystem::path& path);

/// One dialogue encoded for the generator: flattened context ids, response
/// ids with their surface tokens (kept for keyword membership), the gold
/// emotion, and the recognition signal once attached.
struct EncodedDialogue {
  std::vector<int> context_ids;
  std::vector<int> response_ids;
  std::vector<std::string> response_tokens;
  int emotion_id = 0;
  Eigen::VectorXd recognition;
  int intent_id = 0;
};

std::vector<EncodedDialogue> encode_dialogues(const std::vector<NormalizedExample>& examples,
                                              const Vocabulary& vocab, const ModelConfig& config);

void attach_recognition(std::vector<EncodedDialogue>& examples,
                        const std::vector<RecognitionLabel>& labels);

/// Teacher-forcing batch. Step t feeds prev_ids[t] and is scored against
/// gold_ids[t]; row b of step_masks[t] is 1 while t is a real position of
/// example b (its response tokens plus one closing end-of-sequence step).
struct TrainingBatch {
  std::vector<std::vector<int>> contexts;  // ragged; the encoder pads
  std::vector<std::vector<int>> prev_ids;  // [t][b]
  std::vector<std::vector<int>> gold_ids;  // [t][b]
  std::vector<ad::Mat> step_masks;         // T entries, B x 1
  ad::Mat copy_targets;                    // B x T in {0,1}, 0 on pads
  ad::Mat recognition;                     // B x 9
  std::vector<int> emotions;
  std::vector<int> intents;  // recognition argmax
  double token_count = 0.0;  // non-pad response positions
  int T = 0;
  int B = 0;
};

/// copy_targets marks gold tokens listed under the example's recognition
/// intent in the keyword table.
TrainingBatch make_batch(const std::vector<EncodedDialogue>& examples, const KeywordTable& table);

struct LossBreakdown {
  double l1 = 0.0;
  double l2 = 0.0;
  double l3 = 0.0;
  double l4 = 0.0;
  double total = 0.0;
};

/// Builds the full forward graph and reads off the four losses. With
/// backprop set, clears the parameter gradients and backpropagates the
/// weighted total into them. Throws when any term is non-finite, naming it.
LossBreakdown compute_losses(EmphiModel& model, const TrainingBatch& batch,
                             const TrainingConfig& config, bool backprop);

struct EpochRecord {
  int epoch = 0;
  LossBreakdown train;
  double validation_total = 0.0;
  bool has_validation = false;
};

std::string format_epoch_line(const EpochRecord& r);

struct TrainResult {
  std::vector<EpochRecord> log;
  int best_epoch = -1;
  double best_validation = 0.0;
  bool early_stopped = false;
};

/// Minimizes the weighted total with adaptive moments (global-norm clip 5),
/// reshuffling from the config seed each epoch. Early-stops on validation
/// total with config.patience and restores the best epoch's parameters;
/// with an empty validation set it runs max_epochs and keeps the final
/// parameters. Aborts when the training total exceeds ten times its
/// first-epoch value for three consecutive epochs. Single-threaded and
/// bit-for-bit seed-deterministic.
TrainResult train_model(EmphiModel& model, const std::vector<EncodedDialogue>& train_set,
                        const std::vector<EncodedDialogue>& valid_set, const KeywordTable& table,
                        const TrainingConfig& config, std::ostream* log = nullptr,
                        const std::function<void(int)>& after_epoch = {});

/// Central finite differences (step 1e-5) on a random parameter sample
/// against the analytic gradient of the weighted total. Returns the largest
/// relative error, with the denominator floored at 1e-6 so near-zero
/// gradients are compared absolutely.
double gradient_check(EmphiModel& model, const TrainingBatch& batch, const TrainingConfig& config,
                      int sample_size, RngStream& rng);

}  // namespace emphi
