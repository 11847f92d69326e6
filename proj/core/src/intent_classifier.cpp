#include "emphi/intent_classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "emphi/tokenize.hpp"

namespace emphi {
namespace {

using json = nlohmann::json;
using ad::Graph;
using ad::Mat;
using ad::Var;

json config_to_json(const ClassifierConfig& c) {
  json j;
  j["vocab_size"] = c.vocab_size;
  j["embedding_dim"] = c.embedding_dim;
  j["hidden_dim"] = c.hidden_dim;
  j["ffn_hidden"] = c.ffn_hidden;
  j["learning_rate"] = c.learning_rate;
  j["batch_size"] = c.batch_size;
  j["max_epochs"] = c.max_epochs;
  j["held_out_fraction"] = c.held_out_fraction;
  j["plateau_patience"] = c.plateau_patience;
  j["max_tokens"] = c.max_tokens;
  j["seed"] = c.seed;
  return j;
}

ClassifierConfig config_from_json(const json& j) {
  ClassifierConfig c;
  c.vocab_size = j.at("vocab_size").get<int>();
  c.embedding_dim = j.at("embedding_dim").get<int>();
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.ffn_hidden = j.at("ffn_hidden").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.max_epochs = j.at("max_epochs").get<int>();
  c.held_out_fraction = j.at("held_out_fraction").get<double>();
  c.plateau_patience = j.at("plateau_patience").get<int>();
  c.max_tokens = j.at("max_tokens").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

struct Padded {
  std::vector<std::vector<int>> steps;  // steps[t][b]
  std::vector<Mat> mask_cols;           // Bx1 per step
  Mat inv_len;                          // Bx1
  int T = 0;
  int B = 0;
};

Padded pad_rows(const std::vector<std::vector<int>>& rows) {
  Padded p;
  p.B = static_cast<int>(rows.size());
  std::size_t T = 0;
  for (const auto& r : rows) {
    if (r.empty()) throw EmphiError("classifier input must be a nonempty token sequence");
    T = std::max(T, r.size());
  }
  p.T = static_cast<int>(T);
  p.steps.assign(T, std::vector<int>(rows.size(), kPadId));
  p.mask_cols.assign(T, Mat::Zero(p.B, 1));
  p.inv_len = Mat::Zero(p.B, 1);
  for (std::size_t b = 0; b < rows.size(); ++b) {
    for (std::size_t t = 0; t < rows[b].size(); ++t) {
      p.steps[t][b] = rows[b][t];
      p.mask_cols[t](static_cast<Eigen::Index>(b), 0) = 1.0;
    }
    p.inv_len(static_cast<Eigen::Index>(b), 0) = 1.0 / static_cast<double>(rows[b].size());
  }
  return p;
}

}  // namespace

std::vector<EncodedIntentExample> encode_intent_corpus(const std::vector<IntentExample>& corpus,
                                                       const Vocabulary& vocab, int max_tokens) {
  std::vector<EncodedIntentExample> out;
  out.reserve(corpus.size());
  for (const auto& ex : corpus) {
    auto tokens = tokenize(ex.text);
    if (tokens.size() > static_cast<std::size_t>(max_tokens)) {
      tokens.resize(static_cast<std::size_t>(max_tokens));
    }
    if (tokens.empty()) continue;
    out.push_back(EncodedIntentExample{vocab.encode(tokens), ex.intent.id});
  }
  if (out.empty()) throw EmphiError("intent corpus is empty after tokenization");
  return out;
}

IntentClassifier::IntentClassifier(const ClassifierConfig& config)
    : config_(config), store_(std::make_unique<nn::ParamStore>()) {
  if (config_.vocab_size <= 0) throw EmphiError("classifier needs a positive vocab size");
  embedding_ = &store_->create("cls.embedding", config_.vocab_size, config_.embedding_dim);
  fwd_ = nn::GruCell(*store_, "cls.gru_fwd", config_.embedding_dim, config_.hidden_dim);
  bwd_ = nn::GruCell(*store_, "cls.gru_bwd", config_.embedding_dim, config_.hidden_dim);
  head_ = nn::Ffn2(*store_, "cls.head", 2 * config_.hidden_dim, config_.ffn_hidden, kNumIntents);
}

void IntentClassifier::init(RngStream& rng) { nn::init_params(store_->all(), rng); }

Var IntentClassifier::build_logits(Graph& g, const std::vector<std::vector<int>>& rows) const {
  Padded p = pad_rows(rows);
  Var table = g.param(*embedding_);
  std::vector<Var> embs(static_cast<std::size_t>(p.T));
  std::vector<Var> masks(static_cast<std::size_t>(p.T));
  for (int t = 0; t < p.T; ++t) {
    embs[static_cast<std::size_t>(t)] = g.gather_rows(table, p.steps[static_cast<std::size_t>(t)]);
    masks[static_cast<std::size_t>(t)] = g.input(p.mask_cols[static_cast<std::size_t>(t)]);
  }

  Var zero = g.input(Mat::Zero(p.B, config_.hidden_dim));
  std::vector<Var> fwd_states(static_cast<std::size_t>(p.T));
  Var h = zero;
  for (int t = 0; t < p.T; ++t) {
    h = fwd_.masked_step(g, embs[static_cast<std::size_t>(t)], h, masks[static_cast<std::size_t>(t)]);
    fwd_states[static_cast<std::size_t>(t)] = h;
  }
  std::vector<Var> bwd_states(static_cast<std::size_t>(p.T));
  h = zero;
  for (int t = p.T - 1; t >= 0; --t) {
    h = bwd_.masked_step(g, embs[static_cast<std::size_t>(t)], h, masks[static_cast<std::size_t>(t)]);
    bwd_states[static_cast<std::size_t>(t)] = h;
  }

  Var pooled;
  for (int t = 0; t < p.T; ++t) {
    Var both = g.concat_cols({fwd_states[static_cast<std::size_t>(t)],
                              bwd_states[static_cast<std::size_t>(t)]});
    Var masked = g.mul_colvec(both, masks[static_cast<std::size_t>(t)]);
    pooled = (t == 0) ? masked : g.add(pooled, masked);
  }
  pooled = g.mul_colvec(pooled, g.input(p.inv_len));
  return head_.apply(g, pooled);
}

Eigen::MatrixXd IntentClassifier::classify_batch(const std::vector<std::vector<int>>& batch) const {
  if (batch.empty()) throw EmphiError("classify_batch needs at least one sequence");
  std::vector<std::vector<int>> rows = batch;
  for (auto& r : rows) {
    if (r.size() > static_cast<std::size_t>(config_.max_tokens)) {
      r.resize(static_cast<std::size_t>(config_.max_tokens));
    }
  }
  Graph g;
  Var logits = build_logits(g, rows);
  Var probs = g.softmax_rows(logits);
  return g.value(probs);
}

Eigen::VectorXd IntentClassifier::classify(const std::vector<int>& ids) const {
  Eigen::MatrixXd probs = classify_batch({ids});
  return probs.row(0).transpose();
}

IntentLabel IntentClassifier::recognize(const std::vector<int>& ids) const {
  Eigen::MatrixXd probs = classify_batch({ids});
  return intent_by_id(nn::argmax_row(probs, 0));
}

double IntentClassifier::evaluate_accuracy(const std::vector<EncodedIntentExample>& corpus) const {
  if (corpus.empty()) throw EmphiError("cannot evaluate accuracy on an empty corpus");
  std::size_t hit = 0;
  std::size_t at = 0;
  const std::size_t chunk = 256;
  while (at < corpus.size()) {
    std::size_t n = std::min(chunk, corpus.size() - at);
    std::vector<std::vector<int>> rows;
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) rows.push_back(corpus[at + i].ids);
    Eigen::MatrixXd probs = classify_batch(rows);
    for (std::size_t i = 0; i < n; ++i) {
      if (nn::argmax_row(probs, static_cast<Eigen::Index>(i)) == corpus[at + i].label) ++hit;
    }
    at += n;
  }
  return static_cast<double>(hit) / static_cast<double>(corpus.size());
}

ClassifierTrainStats IntentClassifier::train(const std::vector<EncodedIntentExample>& corpus) {
  if (corpus.empty()) throw EmphiError("cannot train the classifier on an empty corpus");
  bool all_zero = true;
  for (nn::Tensor* t : store_->all()) all_zero = all_zero && t->value.isZero(0.0);
  if (all_zero) {
    throw EmphiError("classifier parameters are uninitialized; call init or load first");
  }

  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  RngStream split_rng = RngStream::fork(config_.seed, "classifier.split");
  split_rng.shuffle(order);

  std::size_t held = 0;
  if (config_.held_out_fraction > 0.0 && corpus.size() >= 2) {
    held = static_cast<std::size_t>(std::llround(config_.held_out_fraction *
                                                 static_cast<double>(corpus.size())));
    held = std::max<std::size_t>(held, 1);
    held = std::min(held, corpus.size() - 1);
  }
  std::vector<EncodedIntentExample> held_out, training;
  held_out.reserve(held);
  training.reserve(corpus.size() - held);
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < held ? held_out : training).push_back(corpus[order[i]]);
  }

  nn::Adam adam(store_->all(), config_.learning_rate);
  ClassifierTrainStats stats;
  double best_train_loss = std::numeric_limits<double>::infinity();
  int stall = 0;
  double best_acc = -1.0;
  std::vector<Mat> best_values;

  auto snapshot = [&]() {
    best_values.clear();
    for (nn::Tensor* t : store_->all()) best_values.push_back(t->value);
  };

  for (int epoch = 0; epoch < config_.max_epochs; ++epoch) {
    RngStream epoch_rng = RngStream::fork(config_.seed, "classifier.epoch." + std::to_string(epoch));
    std::vector<std::size_t> idx(training.size());
    std::iota(idx.begin(), idx.end(), 0);
    epoch_rng.shuffle(idx);

    double loss_sum = 0.0;
    std::size_t seen = 0;
    std::size_t bs = static_cast<std::size_t>(config_.batch_size);
    for (std::size_t at = 0; at < idx.size(); at += bs) {
      std::size_t n = std::min(bs, idx.size() - at);
      std::vector<std::vector<int>> rows;
      std::vector<int> gold;
      rows.reserve(n);
      gold.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        rows.push_back(training[idx[at + i]].ids);
        gold.push_back(training[idx[at + i]].label);
      }
      Graph g;
      Var logits = build_logits(g, rows);
      Var logp = g.log_softmax_rows(logits);
      Var picked = g.pick(logp, gold);
      Var loss = g.scale(g.sum_all(picked), -1.0 / static_cast<double>(n));
      double value = g.value(loss)(0, 0);
      if (!std::isfinite(value)) {
        throw EmphiError("classifier cross-entropy became non-finite at epoch " +
                         std::to_string(epoch));
      }
      store_->zero_grads();
      g.backward(loss);
      adam.step();
      loss_sum += value * static_cast<double>(n);
      seen += n;
    }
    double epoch_loss = loss_sum / static_cast<double>(seen);
    stats.train_loss.push_back(epoch_loss);
    ++stats.epochs_run;

    double acc = held_out.empty() ? 0.0 : evaluate_accuracy(held_out);
    stats.held_out_accuracy.push_back(acc);
    if (held_out.empty() || acc > best_acc) {
      best_acc = held_out.empty() ? 0.0 : acc;
      snapshot();
    }

    if (epoch_loss < best_train_loss - 1e-6) {
      best_train_loss = epoch_loss;
      stall = 0;
    } else if (++stall >= config_.plateau_patience) {
      adam.set_lr(adam.lr() * 0.5);
      stall = 0;
    }
    if (adam.lr() < 1e-7) break;
  }

  if (!best_values.empty()) {
    const auto& tensors = store_->all();
    for (std::size_t i = 0; i < tensors.size(); ++i) tensors[i]->value = best_values[i];
  }
  held_out_accuracy_ = std::max(best_acc, 0.0);
  stats.final_held_out_accuracy = held_out_accuracy_;
  return stats;
}

void IntentClassifier::save(const std::filesystem::path& checkpoint,
                            const std::filesystem::path& manifest,
                            const std::string& vocab_hash) const {
  nn::save_tensors(checkpoint, store_->all());
  json j;
  j["kind"] = "intent-classifier";
  j["config"] = config_to_json(config_);
  j["vocab_hash"] = vocab_hash;
  j["held_out_accuracy"] = held_out_accuracy_;
  j["parameter_count"] = parameter_count();
  atomic_write_file(manifest, j.dump(2) + "\n");
}

IntentClassifier IntentClassifier::load(const std::filesystem::path& checkpoint,
                                        const std::filesystem::path& manifest) {
  json j = json::parse(read_text_file(manifest));
  if (j.value("kind", "") != "intent-classifier") {
    throw EmphiError("not an intent-classifier manifest: " + manifest.string());
  }
  IntentClassifier cls(config_from_json(j.at("config")));
  nn::load_tensors(checkpoint, cls.store_->all());
  cls.vocab_hash_ = j.at("vocab_hash").get<std::string>();
  cls.held_out_accuracy_ = j.at("held_out_accuracy").get<double>();
  return cls;
}

}  // namespace emphi
