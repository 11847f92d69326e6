#include "emphi/emphi_model.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace emphi {
namespace {

using json = nlohmann::json;
using ad::Graph;
using ad::Mat;
using ad::Var;

json config_to_json(const ModelConfig& c) {
  json j;
  j["vocab_size"] = c.vocab_size;
  j["embedding_dim"] = c.embedding_dim;
  j["encoder_hidden"] = c.encoder_hidden;
  j["encoder_layers"] = c.encoder_layers;
  j["decoder_hidden"] = c.decoder_hidden;
  j["decoder_layers"] = c.decoder_layers;
  j["intent_embedding_dim"] = c.intent_embedding_dim;
  j["emotion_embedding_dim"] = c.emotion_embedding_dim;
  j["ffn_hidden"] = c.ffn_hidden;
  j["attention_dim"] = c.attention_dim;
  j["max_context_tokens"] = c.max_context_tokens;
  j["max_response_tokens"] = c.max_response_tokens;
  j["disable_intent"] = c.disable_intent;
  j["disable_gate"] = c.disable_gate;
  j["disable_copy"] = c.disable_copy;
  j["mask_copy_to_keywords"] = c.mask_copy_to_keywords;
  return j;
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.vocab_size = j.at("vocab_size").get<int>();
  c.embedding_dim = j.at("embedding_dim").get<int>();
  c.encoder_hidden = j.at("encoder_hidden").get<int>();
  c.encoder_layers = j.at("encoder_layers").get<int>();
  c.decoder_hidden = j.at("decoder_hidden").get<int>();
  c.decoder_layers = j.at("decoder_layers").get<int>();
  c.intent_embedding_dim = j.at("intent_embedding_dim").get<int>();
  c.emotion_embedding_dim = j.at("emotion_embedding_dim").get<int>();
  c.ffn_hidden = j.at("ffn_hidden").get<int>();
  c.attention_dim = j.at("attention_dim").get<int>();
  c.max_context_tokens = j.at("max_context_tokens").get<int>();
  c.max_response_tokens = j.at("max_response_tokens").get<int>();
  c.disable_intent = j.at("disable_intent").get<bool>();
  c.disable_gate = j.at("disable_gate").get<bool>();
  c.disable_copy = j.at("disable_copy").get<bool>();
  c.mask_copy_to_keywords = j.at("mask_copy_to_keywords").get<bool>();
  return c;
}

Eigen::VectorXd row_of(const Mat& m, Eigen::Index i) { return m.row(i).transpose(); }

}  // namespace

EmphiModel::EmphiModel(const ModelConfig& config)
    : config_(config), store_(std::make_unique<nn::ParamStore>()) {
  if (config_.vocab_size <= 4) throw EmphiError("model needs a vocab larger than the specials");
  if (config_.encoder_layers < 1 || config_.decoder_layers < 1) {
    throw EmphiError("model needs at least one encoder and one decoder layer");
  }
  const int emb = config_.embedding_dim;
  const int eh = config_.encoder_hidden;
  const int ctx = 2 * eh;
  const int dh = config_.decoder_hidden;
  const int d = config_.intent_embedding_dim;
  const int de = config_.emotion_embedding_dim;

  embedding_ = &store_->create("embedding", config_.vocab_size, emb);
  for (int l = 0; l < config_.encoder_layers; ++l) {
    int in = (l == 0) ? emb : ctx;
    enc_fwd_.emplace_back(*store_, "encoder.l" + std::to_string(l) + ".fwd", in, eh);
    enc_bwd_.emplace_back(*store_, "encoder.l" + std::to_string(l) + ".bwd", in, eh);
  }
  for (int l = 0; l < config_.decoder_layers; ++l) {
    bridge_.emplace_back(*store_, "bridge.l" + std::to_string(l), ctx, dh);
  }
  intent_emb_ = &store_->create("intent_embedding", kNumIntents, d);
  emotion_emb_ = &store_->create("emotion_embedding", kNumEmotions, de);
  prior_head_ = nn::Ffn2(*store_, "prior_head", ctx, config_.ffn_hidden, kNumIntents);
  emotion_head_ = nn::Ffn2(*store_, "emotion_head", ctx, config_.ffn_hidden, kNumEmotions);
  att_Ws_ = &store_->create("attention.Ws", dh, config_.attention_dim);
  att_Uh_ = &store_->create("attention.Uh", ctx, config_.attention_dim);
  att_b_ = &store_->create("attention.b", 1, config_.attention_dim);
  att_v_ = &store_->create("attention.v", config_.attention_dim, 1);
  for (int l = 0; l < config_.decoder_layers; ++l) {
    int in = (l == 0) ? emb + d + de + ctx : dh;
    dec_.emplace_back(*store_, "decoder.l" + std::to_string(l), in, dh);
  }
  gate_intent_net_ = nn::Ffn2(*store_, "gate.intent", emb + ctx + dh, config_.ffn_hidden, d);
  gate_emotion_net_ = nn::Ffn2(*store_, "gate.emotion", emb + ctx + dh, config_.ffn_hidden, de);
  copy_score_ = &store_->create("copy.v_s", dh, 1);
  generic_head_ = &store_->create("copy.W_g", config_.vocab_size, dh);
  intent_head_ = &store_->create("copy.W_i", config_.vocab_size, dh);
}

void EmphiModel::init(RngStream& rng) { nn::init_params(store_->all(), rng); }

ad::Mat EmphiModel::keyword_vocab_mask(const KeywordTable& table, const Vocabulary& vocab) {
  Mat mask = Mat::Zero(kNumIntents, vocab.size());
  for (int z = 0; z < kNumIntents; ++z) {
    for (const auto& entry : table.list(z)) {
      int id = vocab.id_of(entry.token);
      if (id != kUnkId) mask(z, id) = 1.0;
    }
  }
  return mask;
}

void EmphiModel::set_intent_token_mask(ad::Mat mask) {
  if (mask.rows() != kNumIntents || mask.cols() != config_.vocab_size) {
    throw EmphiError("intent token mask must be 9 x vocab");
  }
  if (config_.mask_copy_to_keywords) {
    for (int z = 0; z < kNumIntents; ++z) {
      if (mask.row(z).sum() < 1.0) {
        throw EmphiError(std::string("no in-vocabulary keywords for intent ") +
                         std::string(intent_names()[static_cast<std::size_t>(z)]));
      }
    }
  }
  intent_token_mask_ = std::move(mask);
}

EncoderGraph EmphiModel::build_encoder(Graph& g,
                                       const std::vector<std::vector<int>>& contexts) const {
  if (contexts.empty()) throw EmphiError("encoder needs at least one context");
  const int B = static_cast<int>(contexts.size());
  std::size_t T = 0;
  for (const auto& c : contexts) {
    if (c.empty()) throw EmphiError("encoder context must be nonempty");
    if (c.size() > static_cast<std::size_t>(config_.max_context_tokens)) {
      throw EmphiError("context length " + std::to_string(c.size()) + " exceeds the maximum of " +
                       std::to_string(config_.max_context_tokens));
    }
    T = std::max(T, c.size());
  }

  std::vector<std::vector<int>> steps(T, std::vector<int>(contexts.size(), kPadId));
  std::vector<Var> masks(T);
  Mat attn_mask = Mat::Zero(B, static_cast<Eigen::Index>(T));
  for (std::size_t t = 0; t < T; ++t) {
    Mat m = Mat::Zero(B, 1);
    for (std::size_t b = 0; b < contexts.size(); ++b) {
      if (t < contexts[b].size()) {
        steps[t][b] = contexts[b][t];
        m(static_cast<Eigen::Index>(b), 0) = 1.0;
        attn_mask(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(t)) = 1.0;
      }
    }
    masks[t] = g.input(std::move(m));
  }

  Var table = g.param(*embedding_);
  std::vector<Var> cur(T);
  for (std::size_t t = 0; t < T; ++t) cur[t] = g.gather_rows(table, steps[t]);

  Var h_m;
  Var zero = g.input(Mat::Zero(B, config_.encoder_hidden));
  for (int l = 0; l < config_.encoder_layers; ++l) {
    std::vector<Var> fwd(T), bwd(T);
    Var h = zero;
    for (std::size_t t = 0; t < T; ++t) {
      h = enc_fwd_[static_cast<std::size_t>(l)].masked_step(g, cur[t], h, masks[t]);
      fwd[t] = h;
    }
    h = zero;
    for (std::size_t t = T; t-- > 0;) {
      h = enc_bwd_[static_cast<std::size_t>(l)].masked_step(g, cur[t], h, masks[t]);
      bwd[t] = h;
    }
    for (std::size_t t = 0; t < T; ++t) cur[t] = g.concat_cols({fwd[t], bwd[t]});
    if (l == config_.encoder_layers - 1) h_m = g.concat_cols({fwd[T - 1], bwd[0]});
  }

  EncoderGraph enc;
  enc.states_all = g.concat_rows(cur);
  enc.proj = g.add_rowvec(g.matmul(enc.states_all, g.param(*att_Uh_)), g.param(*att_b_));
  enc.h_m = h_m;
  enc.attn_mask = std::move(attn_mask);
  enc.T = static_cast<int>(T);
  enc.B = B;
  return enc;
}

Var EmphiModel::build_prior_logits(Graph& g, Var h_m) const { return prior_head_.apply(g, h_m); }

Var EmphiModel::build_emotion_logits(Graph& g, Var h_m) const {
  return emotion_head_.apply(g, h_m);
}

std::vector<Var> EmphiModel::build_initial_state(Graph& g, Var h_m) const {
  std::vector<Var> states;
  states.reserve(bridge_.size());
  for (const auto& lin : bridge_) states.push_back(g.tanh(lin.apply(g, h_m)));
  return states;
}

StepGraph EmphiModel::build_decode_step(Graph& g, const EncoderGraph& enc,
                                        const std::vector<Var>& prev_states,
                                        const std::vector<int>& prev_ids,
                                        const std::vector<int>& intent_ids,
                                        const std::vector<int>& emotion_ids, Var step_mask,
                                        const DecodeOverrides* overrides) const {
  const int B = enc.B;
  if (static_cast<int>(prev_ids.size()) != B || static_cast<int>(intent_ids.size()) != B ||
      static_cast<int>(emotion_ids.size()) != B) {
    throw EmphiError("decode step batch size mismatch");
  }
  if (prev_states.size() != dec_.size()) throw EmphiError("decoder state layer count mismatch");

  StepGraph out;
  Var emb_prev = g.gather_rows(g.param(*embedding_), prev_ids);
  Var s_prev_top = prev_states.back();

  Var query = g.matmul(s_prev_top, g.param(*att_Ws_));
  Var scores = g.attention_scores(enc.proj, query, g.param(*att_v_), enc.T);
  out.attn_weights = g.softmax_rows_masked(scores, enc.attn_mask);
  out.c_att = g.attention_context(enc.states_all, out.attn_weights);

  Var vz = g.gather_rows(g.param(*intent_emb_), intent_ids);
  Var ve = g.gather_rows(g.param(*emotion_emb_), emotion_ids);
  Var vz_in = vz, ve_in = ve;
  if (!config_.disable_gate) {
    Var gin = g.concat_cols({emb_prev, out.c_att, s_prev_top});
    out.gate_intent = g.sigmoid(gate_intent_net_.apply(g, gin));
    out.gate_emotion = g.sigmoid(gate_emotion_net_.apply(g, gin));
    if (overrides && overrides->force_gate_zero) {
      out.gate_intent = g.input(Mat::Zero(B, config_.intent_embedding_dim));
      out.gate_emotion = g.input(Mat::Zero(B, config_.emotion_embedding_dim));
    }
    vz_in = g.cmul(out.gate_intent, vz);
    ve_in = g.cmul(out.gate_emotion, ve);
  }
  if (config_.disable_intent) {
    vz_in = g.input(Mat::Zero(B, config_.intent_embedding_dim));
  }

  Var x = g.concat_cols({emb_prev, vz_in, ve_in, out.c_att});
  out.states.reserve(dec_.size());
  Var below = x;
  for (std::size_t l = 0; l < dec_.size(); ++l) {
    Var s = step_mask.valid() ? dec_[l].masked_step(g, below, prev_states[l], step_mask)
                              : dec_[l].step(g, below, prev_states[l]);
    out.states.push_back(s);
    below = s;
  }
  Var s_top = out.states.back();

  out.generic_probs = g.softmax_rows(g.matmul_nt(s_top, g.param(*generic_head_)));
  if (config_.disable_copy) {
    out.token_probs = out.generic_probs;
    return out;
  }

  Var logits_i = g.matmul_nt(s_top, g.param(*intent_head_));
  if (config_.mask_copy_to_keywords) {
    if (intent_token_mask_.size() == 0) {
      throw EmphiError("mask_copy_to_keywords is set but no intent token mask was provided");
    }
    Mat rows(B, config_.vocab_size);
    for (int b = 0; b < B; ++b) {
      rows.row(b) = intent_token_mask_.row(intent_ids[static_cast<std::size_t>(b)]);
    }
    out.intent_probs = g.softmax_rows_masked(logits_i, std::move(rows));
  } else {
    out.intent_probs = g.softmax_rows(logits_i);
  }

  out.alpha = g.sigmoid(g.matmul(s_top, g.param(*copy_score_)));
  if (overrides && overrides->force_alpha) {
    out.alpha = g.input(Mat::Constant(B, 1, *overrides->force_alpha));
  }
  out.token_probs = g.add(g.mul_colvec(out.generic_probs, g.affine(out.alpha, -1.0, 1.0)),
                          g.mul_colvec(out.intent_probs, out.alpha));
  return out;
}

EncoderOutput EmphiModel::encode_context(const std::vector<int>& context_ids) const {
  Graph g;
  EncoderGraph enc = build_encoder(g, {context_ids});
  EncoderOutput out;
  out.states = g.value(enc.states_all);
  out.h_m = row_of(g.value(enc.h_m), 0);
  return out;
}

Eigen::VectorXd EmphiModel::prior_intent(const EncoderOutput& enc) const {
  Graph g;
  Var h_m = g.input(enc.h_m.transpose());
  Var probs = g.softmax_rows(build_prior_logits(g, h_m));
  return row_of(g.value(probs), 0);
}

Eigen::VectorXd EmphiModel::classify_emotion(const EncoderOutput& enc) const {
  Graph g;
  Var h_m = g.input(enc.h_m.transpose());
  Var probs = g.softmax_rows(build_emotion_logits(g, h_m));
  return row_of(g.value(probs), 0);
}

EncoderGraph EmphiModel::wrap_encoder_states(Graph& g, const Eigen::MatrixXd& states) const {
  if (states.rows() < 1 || states.cols() != 2 * config_.encoder_hidden) {
    throw EmphiError("encoder states must be m x 2*encoder_hidden");
  }
  EncoderGraph enc;
  enc.states_all = g.input(states);
  enc.proj = g.add_rowvec(g.matmul(enc.states_all, g.param(*att_Uh_)), g.param(*att_b_));
  enc.h_m = g.input(states.row(states.rows() - 1));
  enc.attn_mask = Mat::Ones(1, states.rows());
  enc.T = static_cast<int>(states.rows());
  enc.B = 1;
  return enc;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> EmphiModel::attend(
    const Eigen::VectorXd& state_top, const Eigen::MatrixXd& encoder_states) const {
  Graph g;
  EncoderGraph enc = wrap_encoder_states(g, encoder_states);
  Var query = g.matmul(g.input(state_top.transpose()), g.param(*att_Ws_));
  Var scores = g.attention_scores(enc.proj, query, g.param(*att_v_), enc.T);
  Var weights = g.softmax_rows_masked(scores, enc.attn_mask);
  Var c_att = g.attention_context(enc.states_all, weights);
  return {row_of(g.value(c_att), 0), row_of(g.value(weights), 0)};
}

DecoderState EmphiModel::initial_state(const EncoderOutput& enc) const {
  Graph g;
  Var h_m = g.input(enc.h_m.transpose());
  std::vector<Var> states = build_initial_state(g, h_m);
  DecoderState st;
  for (Var s : states) st.layer_states.push_back(row_of(g.value(s), 0));
  st.c_att = Eigen::VectorXd::Zero(2 * config_.encoder_hidden);
  st.t = 0;
  return st;
}

std::pair<StepOutput, DecoderState> EmphiModel::decode_step(int prev_token_id,
                                                            const DecoderState& state,
                                                            const Eigen::MatrixXd& encoder_states,
                                                            int intent_id, int emotion_id,
                                                            const DecodeOverrides* overrides) const {
  if (intent_id < 0 || intent_id >= kNumIntents) throw EmphiError("intent id out of range");
  if (emotion_id < 0 || emotion_id >= kNumEmotions) throw EmphiError("emotion id out of range");
  Graph g;
  EncoderGraph enc = wrap_encoder_states(g, encoder_states);
  std::vector<Var> prev;
  prev.reserve(state.layer_states.size());
  for (const auto& s : state.layer_states) prev.push_back(g.input(s.transpose()));
  StepGraph step = build_decode_step(g, enc, prev, {prev_token_id}, {intent_id}, {emotion_id},
                                     Var{}, overrides);

  StepOutput out;
  out.token_probs = row_of(g.value(step.token_probs), 0);
  out.generic_probs = row_of(g.value(step.generic_probs), 0);
  if (step.intent_probs.valid()) out.intent_probs = row_of(g.value(step.intent_probs), 0);
  out.alpha = step.alpha.valid() ? g.value(step.alpha)(0, 0) : 0.0;
  if (step.gate_intent.valid()) out.gate_intent = row_of(g.value(step.gate_intent), 0);
  if (step.gate_emotion.valid()) out.gate_emotion = row_of(g.value(step.gate_emotion), 0);
  out.attention_weights = row_of(g.value(step.attn_weights), 0);

  DecoderState next;
  for (Var s : step.states) next.layer_states.push_back(row_of(g.value(s), 0));
  next.c_att = row_of(g.value(step.c_att), 0);
  next.t = state.t + 1;
  return {std::move(out), std::move(next)};
}

std::vector<GeneratedResponse> EmphiModel::generate(const std::vector<int>& context_ids,
                                                    std::optional<int> intent_id, int max_len,
                                                    int count, RngStream& rng) const {
  if (count < 1) throw EmphiError("generate needs count >= 1");
  if (max_len < 1) throw EmphiError("generate needs max_len >= 1");
  if (intent_id && (*intent_id < 0 || *intent_id >= kNumIntents)) {
    throw EmphiError("intent id out of range");
  }

  EncoderOutput enc = encode_context(context_ids);
  Eigen::VectorXd prior = prior_intent(enc);
  Eigen::VectorXd emotion = classify_emotion(enc);
  int emo = 0;
  for (int i = 1; i < kNumEmotions; ++i) {
    if (emotion(i) > emotion(emo)) emo = i;
  }

  std::vector<GeneratedResponse> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    int z;
    if (intent_id) {
      z = *intent_id;
    } else {
      std::vector<double> weights(prior.data(), prior.data() + prior.size());
      z = rng.categorical(weights);
    }
    GeneratedResponse resp;
    resp.intent_id = z;
    resp.prior_prob = prior(z);
    resp.emotion_id = emo;

    DecoderState state = initial_state(enc);
    int prev = kBosId;
    for (int t = 0; t < max_len; ++t) {
      auto [step, next] = decode_step(prev, state, enc.states, z, emo);
      int best = 0;
      for (Eigen::Index j = 1; j < step.token_probs.size(); ++j) {
        if (step.token_probs(j) > step.token_probs(best)) best = static_cast<int>(j);
      }
      if (best == kEosId) break;
      resp.token_ids.push_back(best);
      state = std::move(next);
      prev = best;
    }
    out.push_back(std::move(resp));
  }
  return out;
}

void EmphiModel::save(const std::filesystem::path& checkpoint,
                      const std::filesystem::path& manifest, const std::string& vocab_hash,
                      const std::string& keyword_hash, std::uint64_t seed) const {
  nn::save_tensors(checkpoint, store_->all());
  json j;
  j["kind"] = "emphi-model";
  j["config"] = config_to_json(config_);
  j["vocab_hash"] = vocab_hash;
  j["keyword_hash"] = keyword_hash;
  j["seed"] = seed;
  j["parameter_count"] = parameter_count();
  atomic_write_file(manifest, j.dump(2) + "\n");
}

EmphiModel EmphiModel::load(const std::filesystem::path& checkpoint,
                            const std::filesystem::path& manifest) {
  json j = json::parse(read_text_file(manifest));
  if (j.value("kind", "") != "emphi-model") {
    throw EmphiError("not a model manifest: " + manifest.string());
  }
  EmphiModel model(config_from_json(j.at("config")));
  nn::load_tensors(checkpoint, model.store_->all());
  model.vocab_hash_ = j.at("vocab_hash").get<std::string>();
  model.keyword_hash_ = j.at("keyword_hash").get<std::string>();
  return model;
}

}  // namespace emphi
