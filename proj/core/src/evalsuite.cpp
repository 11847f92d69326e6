#include "emphi/evalsuite.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <unordered_map>

namespace emphi {

namespace {

constexpr int kMaxOrder = 4;

/// n-gram multiset keyed by the joined tokens (unit separator between them).
std::unordered_map<std::string, int> ngram_counts(const TokenSeq& tokens, int n) {
  std::unordered_map<std::string, int> counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (int j = 1; j < n; ++j) {
      key.push_back('\x1f');
      key += tokens[i + j];
    }
    ++counts[key];
  }
  return counts;
}

double harmonic(double a, double b) {
  if (a <= 0.0 || b <= 0.0) return 0.0;
  return 2.0 * a * b / (a + b);
}

TokenSeq split_ws(const std::string& line) {
  TokenSeq tokens;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) tokens.push_back(std::move(tok));
  return tokens;
}

std::string join_ws(const TokenSeq& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

/// Batched argmax labels, ties toward the lower intent id. Empty sequences
/// fall back to a single unknown-token id.
std::vector<int> classify_all(const std::vector<std::vector<int>>& rows,
                              const IntentClassifier& classifier) {
  std::vector<int> labels;
  labels.reserve(rows.size());
  constexpr std::size_t kChunk = 256;
  for (std::size_t at = 0; at < rows.size(); at += kChunk) {
    std::size_t end = std::min(rows.size(), at + kChunk);
    std::vector<std::vector<int>> chunk;
    chunk.reserve(end - at);
    for (std::size_t i = at; i < end; ++i) {
      chunk.push_back(rows[i].empty() ? std::vector<int>{kUnkId} : rows[i]);
    }
    Eigen::MatrixXd probs = classifier.classify_batch(chunk);
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
      labels.push_back(nn::argmax_row(probs, r));
    }
  }
  return labels;
}

IntentDistribution histogram_of(const std::vector<int>& labels) {
  IntentDistribution hist{};
  for (int id : labels) hist[static_cast<std::size_t>(id)] += 1.0;
  for (double& v : hist) v /= static_cast<double>(labels.size());
  return hist;
}

void check_distribution(const IntentDistribution& d, const char* which) {
  double sum = 0.0;
  for (double v : d) {
    if (!(v >= 0.0)) throw EmphiError(std::string(which) + " distribution has a negative bin");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw EmphiError(std::string(which) + " distribution sums to " + format_double(sum) +
                     ", expected 1");
  }
}

}  // namespace

double bleu(const TokenSeq& hypothesis, const TokenSeq& reference) {
  if (reference.empty()) throw EmphiError("bleu needs a nonempty reference");
  if (hypothesis.empty()) return 0.0;

  double log_sum = 0.0;
  for (int n = 1; n <= kMaxOrder; ++n) {
    auto hyp = ngram_counts(hypothesis, n);
    auto ref = ngram_counts(reference, n);
    long long matches = 0;
    long long total = 0;
    for (const auto& [key, count] : hyp) {
      total += count;
      auto it = ref.find(key);
      if (it != ref.end()) matches += std::min(count, it->second);
    }
    double p;
    if (n == 1) {
      p = (matches > 0) ? static_cast<double>(matches) / total : 0.1 / total;
    } else {
      p = (matches + 1.0) / (total + 1.0);
    }
    log_sum += std::log(p);
  }
  double c = static_cast<double>(hypothesis.size());
  double r = static_cast<double>(reference.size());
  double bp = (c >= r) ? 1.0 : std::exp(1.0 - r / c);
  return bp * std::exp(log_sum / kMaxOrder);
}

BleuPrf bleu_prf(const std::vector<TokenSeq>& samples, const std::vector<TokenSeq>& references) {
  if (samples.empty()) throw EmphiError("bleu_prf needs at least one sample");
  if (references.empty()) throw EmphiError("bleu_prf needs at least one reference");
  BleuPrf out;
  for (const TokenSeq& s : samples) {
    double best = 0.0;
    for (const TokenSeq& r : references) best = std::max(best, bleu(s, r));
    out.precision += best;
  }
  out.precision /= static_cast<double>(samples.size());
  for (const TokenSeq& r : references) {
    double best = 0.0;
    for (const TokenSeq& s : samples) best = std::max(best, bleu(s, r));
    out.recall += best;
  }
  out.recall /= static_cast<double>(references.size());
  out.f1 = harmonic(out.precision, out.recall);
  return out;
}

BleuPrf corpus_bleu_prf(const std::vector<std::vector<TokenSeq>>& sample_sets,
                        const std::vector<std::vector<TokenSeq>>& reference_sets) {
  if (sample_sets.empty()) throw EmphiError("corpus_bleu_prf needs at least one test case");
  if (sample_sets.size() != reference_sets.size()) {
    throw EmphiError("corpus_bleu_prf given " + std::to_string(sample_sets.size()) +
                     " sample sets but " + std::to_string(reference_sets.size()) +
                     " reference sets");
  }
  BleuPrf out;
  for (std::size_t i = 0; i < sample_sets.size(); ++i) {
    BleuPrf one = bleu_prf(sample_sets[i], reference_sets[i]);
    out.precision += one.precision;
    out.recall += one.recall;
  }
  out.precision /= static_cast<double>(sample_sets.size());
  out.recall /= static_cast<double>(sample_sets.size());
  out.f1 = harmonic(out.precision, out.recall);
  return out;
}

double distinct_n(const std::vector<TokenSeq>& responses, int n) {
  if (n < 1) throw EmphiError("distinct_n needs n >= 1");
  std::unordered_map<std::string, int> pool;
  long long total = 0;
  for (const TokenSeq& r : responses) {
    for (const auto& [key, count] : ngram_counts(r, n)) {
      pool[key] += count;
      total += count;
    }
  }
  if (total == 0) {
    throw EmphiError("distinct-" + std::to_string(n) + ": the responses hold no " +
                     std::to_string(n) + "-grams");
  }
  return static_cast<double>(pool.size()) / static_cast<double>(total);
}

double kl_divergence(const IntentDistribution& p, const IntentDistribution& q) {
  check_distribution(p, "left");
  check_distribution(q, "right");
  bool needs_smoothing = false;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] > 0.0 && q[k] == 0.0) needs_smoothing = true;
  }
  IntentDistribution qs = q;
  if (needs_smoothing) {
    constexpr double kEps = 1e-6;
    double norm = 1.0 + kEps * static_cast<double>(qs.size());
    for (double& v : qs) v = (v + kEps) / norm;
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] > 0.0) sum += p[k] * std::log(p[k] / qs[k]);
  }
  return sum;
}

IntentDistribution intent_distribution(const std::vector<TokenSeq>& responses,
                                       const IntentClassifier& classifier,
                                       const Vocabulary& vocab) {
  if (responses.empty()) throw EmphiError("intent_distribution over an empty response list");
  std::vector<std::vector<int>> rows;
  rows.reserve(responses.size());
  for (const TokenSeq& r : responses) rows.push_back(vocab.encode(r));
  return histogram_of(classify_all(rows, classifier));
}

AuditResult audit_bias(const std::filesystem::path& model_file,
                       const std::filesystem::path& human_file,
                       const IntentClassifier& classifier, const Vocabulary& vocab) {
  auto model_lines = read_response_file(model_file);
  auto human_lines = read_response_file(human_file);
  AuditResult result;
  std::size_t n = std::min(model_lines.size(), human_lines.size());
  if (model_lines.size() != human_lines.size()) {
    result.warning = "response files disagree on line count (" +
                     std::to_string(model_lines.size()) + " vs " +
                     std::to_string(human_lines.size()) + "); auditing the first " +
                     std::to_string(n) + " lines of each";
    model_lines.resize(n);
    human_lines.resize(n);
  }
  if (n == 0) throw EmphiError("both response files are empty");
  result.lines_used = n;
  result.model_histogram = intent_distribution(model_lines, classifier, vocab);
  result.human_histogram = intent_distribution(human_lines, classifier, vocab);
  result.kl = kl_divergence(result.model_histogram, result.human_histogram);
  return result;
}

std::string format_audit(const AuditResult& r) {
  std::ostringstream os;
  os << "bias audit v1\n";
  if (!r.warning.empty()) os << "warning: " << r.warning << "\n";
  os << "lines audited: " << r.lines_used << "\n";
  os << "kl direction: model||human\n";
  os << "kl smoothing: 1e-6 added to every human bin then renormalized, only when the model"
        " uses a bin the human histogram leaves empty\n";
  os << "kl(model||human): " << format_double(r.kl) << "\n";
  os << "intent              model     human\n";
  for (int k = 0; k < kNumIntents; ++k) {
    os << std::left << std::setw(20) << intent_by_id(k).name << std::setw(10)
       << format_double(r.model_histogram[static_cast<std::size_t>(k)])
       << format_double(r.human_histogram[static_cast<std::size_t>(k)]) << "\n";
  }
  return os.str();
}

double intent_acc(const EmphiModel& model, const IntentClassifier& classifier,
                  const std::vector<std::vector<int>>& contexts, int max_len, RngStream& rng) {
  if (contexts.empty()) throw EmphiError("intent accuracy over an empty context list");
  std::vector<std::vector<int>> generations;
  std::vector<int> conditioned;
  generations.reserve(contexts.size());
  for (const auto& ctx : contexts) {
    auto responses = model.generate(ctx, std::nullopt, max_len, 1, rng);
    generations.push_back(responses[0].token_ids);
    conditioned.push_back(responses[0].intent_id);
  }
  std::vector<int> labels = classify_all(generations, classifier);
  int hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == conditioned[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

EvalReport evaluate_model(const EmphiModel& model, const IntentClassifier& classifier,
                          const std::vector<std::vector<int>>& contexts,
                          const std::vector<TokenSeq>& references, const Vocabulary& vocab,
                          int samples_per_case, int max_len, RngStream& rng,
                          std::vector<std::vector<TokenSeq>>* sample_groups) {
  if (contexts.empty()) throw EmphiError("evaluation over an empty test split");
  if (contexts.size() != references.size()) {
    throw EmphiError("evaluation given " + std::to_string(contexts.size()) + " contexts but " +
                     std::to_string(references.size()) + " references");
  }
  if (samples_per_case < 1) throw EmphiError("samples_per_case must be positive");

  EvalReport report;
  report.cases = static_cast<int>(contexts.size());
  report.samples_per_case = samples_per_case;

  std::vector<TokenSeq> pooled;
  std::vector<std::vector<int>> pooled_ids;
  std::vector<int> pooled_intents;
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    auto responses = model.generate(contexts[i], std::nullopt, max_len, samples_per_case, rng);
    std::vector<TokenSeq> samples;
    for (const auto& r : responses) {
      samples.push_back(vocab.decode(r.token_ids));
      pooled.push_back(samples.back());
      pooled_ids.push_back(r.token_ids);
      pooled_intents.push_back(r.intent_id);
    }
    BleuPrf prf = bleu_prf(samples, {references[i]});
    report.bleu_precision += prf.precision;
    report.bleu_recall += prf.recall;
    if (sample_groups) sample_groups->push_back(std::move(samples));
  }
  report.bleu_precision /= report.cases;
  report.bleu_recall /= report.cases;
  report.bleu_f1 = harmonic(report.bleu_precision, report.bleu_recall);

  report.distinct_1 = distinct_n(pooled, 1);
  report.distinct_2 = distinct_n(pooled, 2);

  std::vector<int> labels = classify_all(pooled_ids, classifier);
  report.intent_histogram = histogram_of(labels);
  int hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == pooled_intents[i]) ++hits;
  }
  report.intent_accuracy = static_cast<double>(hits) / static_cast<double>(labels.size());

  IntentDistribution human = intent_distribution(references, classifier, vocab);
  report.kl_vs_human = kl_divergence(report.intent_histogram, human);
  return report;
}

std::string format_report(const EvalReport& r) {
  std::ostringstream os;
  os << "eval report v1\n";
  os << "cases: " << r.cases << "\n";
  os << "samples per case: " << r.samples_per_case << "\n";
  os << "bleu smoothing: add-one on n-gram counts for n >= 2; 0.1 numerator floor on zero"
        " unigram overlap\n";
  os << "kl direction: model||human\n";
  os << "kl smoothing: 1e-6 added to every human bin then renormalized, only when the model"
        " uses a bin the human histogram leaves empty\n";
  os << "bleu precision: " << format_double(r.bleu_precision) << "\n";
  os << "bleu recall: " << format_double(r.bleu_recall) << "\n";
  os << "bleu f1: " << format_double(r.bleu_f1) << "\n";
  os << "distinct-1: " << format_double(r.distinct_1) << "\n";
  os << "distinct-2: " << format_double(r.distinct_2) << "\n";
  os << "intent acc: " << format_double(r.intent_accuracy) << "\n";
  os << "kl vs human: " << format_double(r.kl_vs_human) << "\n";
  os << "intent histogram:\n";
  for (int k = 0; k < kNumIntents; ++k) {
    os << "  " << std::left << std::setw(18) << intent_by_id(k).name
       << format_double(r.intent_histogram[static_cast<std::size_t>(k)]) << "\n";
  }
  return os.str();
}

void write_response_file(const std::filesystem::path& path,
                         const std::vector<TokenSeq>& responses) {
  std::string body;
  for (const TokenSeq& r : responses) {
    body += join_ws(r);
    body.push_back('\n');
  }
  atomic_write_file(path, body);
}

std::vector<TokenSeq> read_response_file(const std::filesystem::path& path) {
  std::vector<TokenSeq> out;
  for (const std::string& line : split_lines(read_text_file(path))) {
    TokenSeq tokens = split_ws(line);
    if (!tokens.empty()) out.push_back(std::move(tokens));
  }
  return out;
}

void write_sample_file(const std::filesystem::path& path,
                       const std::vector<std::vector<TokenSeq>>& groups) {
  std::string body;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (i) body.push_back('\n');
    for (const TokenSeq& r : groups[i]) {
      body += join_ws(r);
      body.push_back('\n');
    }
  }
  atomic_write_file(path, body);
}

std::vector<std::vector<TokenSeq>> read_sample_file(const std::filesystem::path& path) {
  std::vector<std::vector<TokenSeq>> groups;
  std::vector<TokenSeq> current;
  for (const std::string& line : split_lines(read_text_file(path))) {
    TokenSeq tokens = split_ws(line);
    if (tokens.empty()) {
      if (!current.empty()) groups.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(std::move(tokens));
    }
  }
  if (!current.empty()) groups.push_back(std::move(current));
  return groups;
}

}  // namespace emphi
