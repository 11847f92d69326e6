#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "emphi/common.hpp"
#include "emphi/emphi_model.hpp"
#include "emphi/intent_classifier.hpp"
#include "emphi/labels.hpp"
#include "emphi/vocab.hpp"

namespace emphi {

using TokenSeq = std::vector<std::string>;

/// Normalized histogram over the nine intents, canonical label order.
using IntentDistribution = std::array<double, kNumIntents>;

/// Sentence BLEU, n-grams up to 4, brevity penalty, add-one smoothing on the
/// n-gram counts for n >= 2 and a 0.1 numerator floor when no unigram
/// overlaps. Returns 0 only for an empty hypothesis; empty references are an
/// error.
double bleu(const TokenSeq& hypothesis, const TokenSeq& reference);

struct BleuPrf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// One-to-many protocol for a single test case: precision is the mean over
/// samples of the best BLEU against any reference, recall the mean over
/// references of the best BLEU against any sample, f1 their harmonic mean
/// (0 when either is 0).
BleuPrf bleu_prf(const std::vector<TokenSeq>& samples, const std::vector<TokenSeq>& references);

/// Corpus values: means of the per-case precisions and recalls, f1 taken of
/// the two means.
BleuPrf corpus_bleu_prf(const std::vector<std::vector<TokenSeq>>& sample_sets,
                        const std::vector<std::vector<TokenSeq>>& reference_sets);

/// Distinct n-grams across all responses over total n-gram occurrences.
/// Errors when the pool holds no n-grams.
double distinct_n(const std::vector<TokenSeq>& responses, int n);

/// Sum p_k ln(p_k / q_k) with 0 ln 0 = 0. When q has an empty bin that p
/// uses, 1e-6 is added to every q bin and q is renormalized first; otherwise
/// q is used as given, so identical inputs give exactly 0.
double kl_divergence(const IntentDistribution& p, const IntentDistribution& q);

/// Normalized histogram of classifier.recognize over the responses.
IntentDistribution intent_distribution(const std::vector<TokenSeq>& responses,
                                       const IntentClassifier& classifier,
                                       const Vocabulary& vocab);

struct AuditResult {
  IntentDistribution model_histogram{};
  IntentDistribution human_histogram{};
  double kl = 0.0;  // KL(model || human)
  std::size_t lines_used = 0;
  std::string warning;  // set when the files disagreed on line count
};

/// Classifies both response files and compares their intent histograms.
/// On a line-count mismatch it warns and proceeds on the aligned prefix.
AuditResult audit_bias(const std::filesystem::path& model_file,
                       const std::filesystem::path& human_file,
                       const IntentClassifier& classifier, const Vocabulary& vocab);

std::string format_audit(const AuditResult& r);

/// For each context: sample an intent from the prior, decode greedily under
/// it, classify the output. Returns the fraction where the classifier
/// recovers the conditioned intent.
double intent_acc(const EmphiModel& model, const IntentClassifier& classifier,
                  const std::vector<std::vector<int>>& contexts, int max_len, RngStream& rng);

struct EvalReport {
  int cases = 0;
  int samples_per_case = 0;
  double bleu_precision = 0.0;
  double bleu_recall = 0.0;
  double bleu_f1 = 0.0;
  double distinct_1 = 0.0;
  double distinct_2 = 0.0;
  double intent_accuracy = 0.0;
  double kl_vs_human = 0.0;
  IntentDistribution intent_histogram{};
};

/// Full test-split evaluation: per context, `samples_per_case` generations
/// with prior-sampled intents score BLEU precision/recall/f1 against the
/// gold reference; the pooled generations feed Distinct-1/2, the intent
/// histogram, intent accuracy, and KL against the gold-response histogram.
EvalReport evaluate_model(const EmphiModel& model, const IntentClassifier& classifier,
                          const std::vector<std::vector<int>>& contexts,
                          const std::vector<TokenSeq>& references, const Vocabulary& vocab,
                          int samples_per_case, int max_len, RngStream& rng,
                          std::vector<std::vector<TokenSeq>>* sample_groups = nullptr);

/// Key: value lines, the metric conventions in force, and the per-intent
/// histogram table.
std::string format_report(const EvalReport& r);

/// Response files: one tokenized response per line, line i aligned to test
/// context i. Readers skip blank lines.
void write_response_file(const std::filesystem::path& path,
                         const std::vector<TokenSeq>& responses);
std::vector<TokenSeq> read_response_file(const std::filesystem::path& path);

/// Multi-sample layout: one group of consecutive lines per context, groups
/// separated by a blank line.
void write_sample_file(const std::filesystem::path& path,
                       const std::vector<std::vector<TokenSeq>>& groups);
std::vector<std::vector<TokenSeq>> read_sample_file(const std::filesystem::path& path);

}  // namespace emphi
