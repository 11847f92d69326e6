#include "emphi/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

namespace emphi {

namespace {

int argmax_entry(const Eigen::VectorXd& v) {
  int best = 0;
  for (int k = 1; k < v.size(); ++k) {
    if (v(k) > v(best)) best = k;
  }
  return best;
}

void check_finite(double v, const char* term) {
  if (!std::isfinite(v)) {
    throw EmphiError(std::string("training aborted: ") + term + " is not finite");
  }
}

}  // namespace

std::array<double, 4> effective_lambdas(const TrainingConfig& config) {
  std::array<double, 4> lam{config.lambda1, config.lambda2, config.lambda3, config.lambda4};
  if (config.disable_intent) {
    lam[1] = 0.0;
    lam[3] = 0.0;
  }
  if (config.disable_copy) lam[3] = 0.0;
  return lam;
}

std::vector<RecognitionLabel> compute_recognition(const std::vector<NormalizedExample>& examples,
                                                  const IntentClassifier& classifier,
                                                  const Vocabulary& vocab) {
  std::vector<RecognitionLabel> out;
  out.reserve(examples.size());
  std::vector<std::vector<int>> rows;
  rows.reserve(examples.size());
  for (const auto& ex : examples) {
    auto tokens = truncate_response(ex.response, classifier.config().max_tokens);
    auto ids = vocab.encode(tokens);
    if (ids.empty()) ids.push_back(kUnkId);
    rows.push_back(std::move(ids));
  }
  constexpr std::size_t kChunk = 256;
  for (std::size_t at = 0; at < rows.size(); at += kChunk) {
    std::size_t end = std::min(rows.size(), at + kChunk);
    std::vector<std::vector<int>> chunk(rows.begin() + at, rows.begin() + end);
    Eigen::MatrixXd probs = classifier.classify_batch(chunk);
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
      RecognitionLabel lab;
      lab.distribution = probs.row(r).transpose();
      lab.intent_id = argmax_entry(lab.distribution);
      out.push_back(std::move(lab));
    }
  }
  return out;
}

void write_recognition_cache(const std::filesystem::path& path,
                             const std::vector<RecognitionLabel>& labels) {
  std::ostringstream os;
  os << "recognition-cache v1\n" << labels.size() << "\n";
  os << std::setprecision(17);
  for (const auto& lab : labels) {
    if (lab.distribution.size() != kNumIntents) {
      throw EmphiError("recognition label must hold nine probabilities");
    }
    for (int k = 0; k < kNumIntents; ++k) {
      if (k) os << ' ';
      os << lab.distribution(k);
    }
    os << ' ' << lab.intent_id << "\n";
  }
  atomic_write_file(path, os.str());
}

std::vector<RecognitionLabel> read_recognition_cache(const std::filesystem::path& path) {
  std::istringstream is(read_text_file(path));
  std::string header;
  std::getline(is, header);
  if (header != "recognition-cache v1") {
    throw EmphiError("unrecognized recognition cache header in " + path.string());
  }
  std::size_t count = 0;
  if (!(is >> count)) throw EmphiError("recognition cache is missing its count line");
  std::vector<RecognitionLabel> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    RecognitionLabel& lab = out[i];
    lab.distribution.resize(kNumIntents);
    for (int k = 0; k < kNumIntents; ++k) {
      if (!(is >> lab.distribution(k))) {
        throw EmphiError("recognition cache ended early at entry " + std::to_string(i));
      }
    }
    if (!(is >> lab.intent_id) || lab.intent_id < 0 || lab.intent_id >= kNumIntents) {
      throw EmphiError("recognition cache holds an invalid intent id at entry " +
                       std::to_string(i));
    }
  }
  return out;
}

std::vector<EncodedDialogue> encode_dialogues(const std::vector<NormalizedExample>& examples,
                                              const Vocabulary& vocab, const ModelConfig& config) {
  std::vector<EncodedDialogue> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    EncodedDialogue enc;
    auto ctx_tokens = flatten_context(ex.context, config.max_context_tokens);
    if (ctx_tokens.empty()) throw EmphiError("dialogue has an empty context");
    enc.context_ids = vocab.encode(ctx_tokens);
    enc.response_tokens = truncate_response(ex.response, config.max_response_tokens);
    enc.response_ids = vocab.encode(enc.response_tokens);
    auto emotion = emotion_by_name(ex.emotion);
    if (!emotion) throw EmphiError("unknown emotion label '" + ex.emotion + "'");
    enc.emotion_id = emotion->id;
    out.push_back(std::move(enc));
  }
  return out;
}

void attach_recognition(std::vector<EncodedDialogue>& examples,
                        const std::vector<RecognitionLabel>& labels) {
  if (examples.size() != labels.size()) {
    throw EmphiError("recognition cache holds " + std::to_string(labels.size()) +
                     " entries for " + std::to_string(examples.size()) + " dialogues");
  }
  for (std::size_t i = 0; i < examples.size(); ++i) {
    examples[i].recognition = labels[i].distribution;
    examples[i].intent_id = labels[i].intent_id;
  }
}

TrainingBatch make_batch(const std::vector<EncodedDialogue>& examples, const KeywordTable& table) {
  if (examples.empty()) throw EmphiError("cannot build a batch from zero dialogues");
  TrainingBatch batch;
  batch.B = static_cast<int>(examples.size());
  std::size_t longest = 0;
  for (const auto& ex : examples) longest = std::max(longest, ex.response_ids.size());
  batch.T = static_cast<int>(longest) + 1;  // one closing end-of-sequence step

  batch.prev_ids.assign(batch.T, std::vector<int>(batch.B, kPadId));
  batch.gold_ids.assign(batch.T, std::vector<int>(batch.B, kPadId));
  batch.step_masks.assign(batch.T, ad::Mat::Zero(batch.B, 1));
  batch.copy_targets = ad::Mat::Zero(batch.B, batch.T);
  batch.recognition.resize(batch.B, kNumIntents);
  batch.emotions.resize(batch.B);
  batch.intents.resize(batch.B);

  for (int b = 0; b < batch.B; ++b) {
    const EncodedDialogue& ex = examples[b];
    if (ex.recognition.size() != kNumIntents) {
      throw EmphiError("dialogue is missing its recognition distribution");
    }
    double sum = ex.recognition.sum();
    if (std::abs(sum - 1.0) > 1e-6) {
      throw EmphiError("recognition distribution sums to " + format_double(sum) +
                       ", expected 1");
    }
    if (ex.intent_id < 0 || ex.intent_id >= kNumIntents) {
      throw EmphiError("recognition intent id out of range");
    }
    if (ex.emotion_id < 0 || ex.emotion_id >= kNumEmotions) {
      throw EmphiError("emotion id out of range");
    }
    if (ex.response_tokens.size() != ex.response_ids.size()) {
      throw EmphiError("response tokens and ids disagree in length");
    }
    batch.contexts.push_back(ex.context_ids);
    batch.recognition.row(b) = ex.recognition.transpose();
    batch.emotions[b] = ex.emotion_id;
    batch.intents[b] = ex.intent_id;

    int n = static_cast<int>(ex.response_ids.size());
    for (int t = 0; t <= n; ++t) {
      batch.prev_ids[t][b] = (t == 0) ? kBosId : ex.response_ids[t - 1];
      batch.gold_ids[t][b] = (t < n) ? ex.response_ids[t] : kEosId;
      batch.step_masks[t](b, 0) = 1.0;
      if (t < n && table.contains(ex.response_tokens[t], ex.intent_id)) {
        batch.copy_targets(b, t) = 1.0;
      }
    }
    batch.token_count += n + 1;
  }
  return batch;
}

LossBreakdown compute_losses(EmphiModel& model, const TrainingBatch& batch,
                             const TrainingConfig& config, bool backprop) {
  if (batch.B < 1 || batch.T < 1) throw EmphiError("empty training batch");
  if (static_cast<int>(batch.prev_ids.size()) != batch.T ||
      static_cast<int>(batch.gold_ids.size()) != batch.T ||
      static_cast<int>(batch.step_masks.size()) != batch.T ||
      batch.copy_targets.cols() != batch.T || batch.copy_targets.rows() != batch.B ||
      batch.recognition.rows() != batch.B) {
    throw EmphiError("training batch fields disagree on shape");
  }
  if (batch.token_count <= 0.0) throw EmphiError("training batch has no scored positions");
  auto lam = effective_lambdas(config);

  ad::Graph g;
  EncoderGraph enc = model.build_encoder(g, batch.contexts);

  ad::Var prior_probs = g.softmax_rows(model.build_prior_logits(g, enc.h_m));
  ad::Var l2 = g.scale(g.sum_all(g.kl_rows(batch.recognition, prior_probs)), 1.0 / batch.B);

  ad::Var emo_logp = g.log_softmax_rows(model.build_emotion_logits(g, enc.h_m));
  ad::Var l3 = g.scale(g.sum_all(g.pick(emo_logp, batch.emotions)), -1.0 / batch.B);

  std::vector<ad::Var> states = model.build_initial_state(g, enc.h_m);
  ad::Var l1_sum;
  ad::Var l4_sum;
  for (int t = 0; t < batch.T; ++t) {
    ad::Var mask = g.input(batch.step_masks[t]);
    StepGraph step = model.build_decode_step(g, enc, states, batch.prev_ids[t], batch.intents,
                                             batch.emotions, mask);
    states = step.states;

    ad::Var logp = g.log(g.clamp(g.pick(step.token_probs, batch.gold_ids[t]), 1e-12, 1.0));
    ad::Var l1_t = g.sum_all(g.cmul(logp, mask));
    l1_sum = l1_sum.valid() ? g.add(l1_sum, l1_t) : l1_t;

    if (!config.disable_copy) {
      ad::Mat q = batch.copy_targets.col(t);
      ad::Var alpha = g.clamp(step.alpha, 1e-7, 1.0 - 1e-7);
      ad::Var hit = g.cmul(g.input(q), g.log(alpha));
      ad::Var miss = g.cmul(g.input(ad::Mat(1.0 - q.array())), g.log(g.affine(alpha, -1.0, 1.0)));
      ad::Var l4_t = g.sum_all(g.cmul(g.add(hit, miss), mask));
      l4_sum = l4_sum.valid() ? g.add(l4_sum, l4_t) : l4_t;
    }
  }
  ad::Var l1 = g.scale(l1_sum, -1.0 / batch.token_count);
  ad::Var l4;
  if (l4_sum.valid()) l4 = g.scale(l4_sum, -1.0 / batch.token_count);

  ad::Var total = g.add(g.add(g.scale(l1, lam[0]), g.scale(l2, lam[1])), g.scale(l3, lam[2]));
  if (l4.valid()) total = g.add(total, g.scale(l4, lam[3]));

  LossBreakdown out;
  out.l1 = g.value(l1)(0, 0);
  out.l2 = g.value(l2)(0, 0);
  out.l3 = g.value(l3)(0, 0);
  out.l4 = l4.valid() ? g.value(l4)(0, 0) : 0.0;
  out.total = g.value(total)(0, 0);
  check_finite(out.l1, "L1");
  check_finite(out.l2, "L2");
  check_finite(out.l3, "L3");
  check_finite(out.l4, "L4");
  check_finite(out.total, "the total loss");

  if (backprop) {
    model.params().zero_grads();
    g.backward(total);
  }
  return out;
}

std::string format_epoch_line(const EpochRecord& r) {
  std::ostringstream os;
  os << "epoch " << r.epoch << " l1 " << format_double(r.train.l1) << " l2 "
     << format_double(r.train.l2) << " l3 " << format_double(r.train.l3) << " l4 "
     << format_double(r.train.l4) << " total " << format_double(r.train.total) << " val ";
  if (r.has_validation) {
    os << format_double(r.validation_total);
  } else {
    os << "-";
  }
  return os.str();
}

namespace {

LossBreakdown weighted_mean(const std::vector<std::pair<LossBreakdown, int>>& parts) {
  LossBreakdown mean;
  double denom = 0.0;
  for (const auto& [loss, weight] : parts) {
    mean.l1 += loss.l1 * weight;
    mean.l2 += loss.l2 * weight;
    mean.l3 += loss.l3 * weight;
    mean.l4 += loss.l4 * weight;
    mean.total += loss.total * weight;
    denom += weight;
  }
  mean.l1 /= denom;
  mean.l2 /= denom;
  mean.l3 /= denom;
  mean.l4 /= denom;
  mean.total /= denom;
  return mean;
}

std::vector<TrainingBatch> slice_batches(const std::vector<EncodedDialogue>& set,
                                         const std::vector<std::size_t>& order, int batch_size,
                                         const KeywordTable& table) {
  std::vector<TrainingBatch> batches;
  for (std::size_t at = 0; at < order.size(); at += batch_size) {
    std::size_t end = std::min(order.size(), at + batch_size);
    std::vector<EncodedDialogue> chunk;
    chunk.reserve(end - at);
    for (std::size_t i = at; i < end; ++i) chunk.push_back(set[order[i]]);
    batches.push_back(make_batch(chunk, table));
  }
  return batches;
}

}  // namespace

TrainResult train_model(EmphiModel& model, const std::vector<EncodedDialogue>& train_set,
                        const std::vector<EncodedDialogue>& valid_set, const KeywordTable& table,
                        const TrainingConfig& config, std::ostream* log,
                        const std::function<void(int)>& after_epoch) {
  if (train_set.empty()) throw EmphiError("training set is empty");
  if (config.batch_size < 1) throw EmphiError("batch_size must be positive");
  if (config.max_epochs < 1) throw EmphiError("max_epochs must be positive");
  if (config.learning_rate <= 0.0) throw EmphiError("learning_rate must be positive");
  const ModelConfig& mc = model.config();
  if (mc.disable_intent != config.disable_intent || mc.disable_gate != config.disable_gate ||
      mc.disable_copy != config.disable_copy) {
    throw EmphiError("ablation switches disagree between the model and the training config");
  }
  bool all_zero = true;
  for (nn::Tensor* t : model.params().all()) all_zero = all_zero && t->value.isZero(0.0);
  if (all_zero) throw EmphiError("model parameters are uninitialized; call init or load first");

  nn::Adam adam(model.params().all(), config.learning_rate);

  std::vector<std::size_t> valid_order(valid_set.size());
  std::iota(valid_order.begin(), valid_order.end(), std::size_t{0});
  std::vector<TrainingBatch> valid_batches;
  if (!valid_set.empty()) {
    valid_batches = slice_batches(valid_set, valid_order, config.batch_size, table);
  }

  TrainResult result;
  double initial_total = 0.0;
  int diverged_streak = 0;
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<ad::Mat> best_params;
  int stall = 0;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    RngStream shuffle_rng =
        RngStream::fork(config.seed, "train.epoch." + std::to_string(epoch));
    shuffle_rng.shuffle(order);

    std::vector<std::pair<LossBreakdown, int>> parts;
    for (auto& batch : slice_batches(train_set, order, config.batch_size, table)) {
      LossBreakdown loss = compute_losses(model, batch, config, true);
      adam.step();
      parts.emplace_back(loss, batch.B);
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train = weighted_mean(parts);

    if (epoch == 1) {
      initial_total = record.train.total;
    } else if (record.train.total > 10.0 * initial_total) {
      if (++diverged_streak >= 3) {
        throw EmphiError("training diverged: total loss stayed above 10x its initial value (" +
                         format_double(initial_total) + ") for 3 consecutive epochs");
      }
    } else {
      diverged_streak = 0;
    }

    if (!valid_batches.empty()) {
      std::vector<std::pair<LossBreakdown, int>> val_parts;
      for (const auto& batch : valid_batches) {
        val_parts.emplace_back(compute_losses(model, batch, config, false), batch.B);
      }
      record.validation_total = weighted_mean(val_parts).total;
      record.has_validation = true;
    }

    result.log.push_back(record);
    if (log) {
      *log << format_epoch_line(record) << "\n";
      log->flush();
    }
    if (after_epoch) after_epoch(epoch);

    if (record.has_validation) {
      if (record.validation_total < best_val) {
        best_val = record.validation_total;
        result.best_epoch = epoch;
        result.best_validation = best_val;
        stall = 0;
        best_params.clear();
        for (const nn::Tensor* t : model.params().all()) best_params.push_back(t->value);
      } else if (++stall >= config.patience) {
        result.early_stopped = true;
        break;
      }
    } else {
      result.best_epoch = epoch;
      result.best_validation = record.train.total;
    }
  }

  if (!best_params.empty()) {
    const auto& tensors = model.params().all();
    for (std::size_t i = 0; i < tensors.size(); ++i) tensors[i]->value = best_params[i];
  }
  return result;
}

double gradient_check(EmphiModel& model, const TrainingBatch& batch, const TrainingConfig& config,
                      int sample_size, RngStream& rng) {
  if (sample_size < 1) throw EmphiError("gradient check needs a positive sample size");
  compute_losses(model, batch, config, true);

  const auto& tensors = model.params().all();
  std::vector<ad::Mat> analytic;
  analytic.reserve(tensors.size());
  long long total = 0;
  for (const nn::Tensor* t : tensors) {
    analytic.push_back(t->grad);
    total += t->size();
  }

  const double h = 1e-5;
  double max_rel = 0.0;
  for (int s = 0; s < sample_size; ++s) {
    long long flat = static_cast<long long>(rng.below(static_cast<std::uint64_t>(total)));
    std::size_t ti = 0;
    while (flat >= tensors[ti]->size()) flat -= tensors[ti++]->size();
    double* cell = tensors[ti]->value.data() + flat;
    double an = analytic[ti].data()[flat];

    double orig = *cell;
    *cell = orig + h;
    double up = compute_losses(model, batch, config, false).total;
    *cell = orig - h;
    double down = compute_losses(model, batch, config, false).total;
    *cell = orig;

    double fd = (up - down) / (2.0 * h);
    double rel = std::abs(fd - an) / std::max(1e-6, std::abs(fd) + std::abs(an));
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

}  // namespace emphi
