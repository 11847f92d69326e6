#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "emphi/ad.hpp"
#include "emphi/common.hpp"
#include "emphi/keywords.hpp"
#include "emphi/labels.hpp"
#include "emphi/nn.hpp"
#include "emphi/vocab.hpp"

namespace emphi {

struct ModelConfig {
  int vocab_size = 0;
  int embedding_dim = 300;
  int encoder_hidden = 300;  // per direction
  int encoder_layers = 2;
  int decoder_hidden = 300;
  int decoder_layers = 2;
  int intent_embedding_dim = 300;
  int emotion_embedding_dim = 300;
  int ffn_hidden = 300;
  int attention_dim = 300;
  int max_context_tokens = 128;
  int max_response_tokens = 32;
  bool disable_intent = false;
  bool disable_gate = false;
  bool disable_copy = false;
  /// Restrict the copy head's distribution to the active intent's keywords
  /// (renormalized). Off by default: the copy head scores the whole
  /// vocabulary.
  bool mask_copy_to_keywords = false;
};

/// Pieces of a batched encoder forward pass. Encoder states are stacked in
/// position-major blocks: row (t*B + b) of states_all is position t of batch
/// row b.
struct EncoderGraph {
  ad::Var states_all;  // (T*B) x 2*encoder_hidden
  ad::Var proj;        // (T*B) x attention_dim, precomputed key projections
  ad::Var h_m;         // B x 2*encoder_hidden
  ad::Mat attn_mask;   // B x T, 1 on real positions
  int T = 0;
  int B = 0;
};

struct DecodeOverrides {
  std::optional<double> force_alpha;
  bool force_gate_zero = false;
};

/// One decoding step inside a graph.
struct StepGraph {
  std::vector<ad::Var> states;  // per decoder layer, post-update
  ad::Var token_probs;          // B x V mixture
  ad::Var generic_probs;        // B x V
  ad::Var intent_probs;         // B x V; invalid when copy is disabled
  ad::Var alpha;                // B x 1; invalid when copy is disabled
  ad::Var gate_intent;          // B x d; invalid when gating is disabled
  ad::Var gate_emotion;         // B x d_e; invalid when gating is disabled
  ad::Var c_att;                // B x 2*encoder_hidden
  ad::Var attn_weights;         // B x T
};

struct EncoderOutput {
  Eigen::MatrixXd states;  // m x 2*encoder_hidden, top layer
  Eigen::VectorXd h_m;     // 2*encoder_hidden
};

struct DecoderState {
  std::vector<Eigen::VectorXd> layer_states;
  Eigen::VectorXd c_att;
  int t = 0;
};

struct StepOutput {
  Eigen::VectorXd token_probs;
  Eigen::VectorXd generic_probs;
  Eigen::VectorXd intent_probs;
  double alpha = 0.0;
  Eigen::VectorXd gate_intent;
  Eigen::VectorXd gate_emotion;
  Eigen::VectorXd attention_weights;
};

struct GeneratedResponse {
  std::vector<int> token_ids;  // no BOS/EOS
  int intent_id = 0;
  double prior_prob = 0.0;
  int emotion_id = 0;
};

/// The generator: 2-layer bidirectional GRU encoder, intent prior and
/// emotion heads over the final context state, and a 2-layer GRU decoder
/// with additive attention, gated intent/emotion embedding injection, and a
/// generic/intent-keyword copy mixture over the vocabulary.
class EmphiModel {
 public:
  explicit EmphiModel(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  long long parameter_count() const { return store_->total_parameters(); }
  nn::ParamStore& params() { return *store_; }

  void init(RngStream& rng);

  /// 9 x V binary matrix: row z marks the vocab ids of intent z's keywords.
  static ad::Mat keyword_vocab_mask(const KeywordTable& table, const Vocabulary& vocab);
  /// Required before decoding when mask_copy_to_keywords is set.
  void set_intent_token_mask(ad::Mat mask);

  // Graph builders shared by training and inference.
  EncoderGraph build_encoder(ad::Graph& g, const std::vector<std::vector<int>>& contexts) const;
  ad::Var build_prior_logits(ad::Graph& g, ad::Var h_m) const;
  ad::Var build_emotion_logits(ad::Graph& g, ad::Var h_m) const;
  std::vector<ad::Var> build_initial_state(ad::Graph& g, ad::Var h_m) const;
  StepGraph build_decode_step(ad::Graph& g, const EncoderGraph& enc,
                              const std::vector<ad::Var>& prev_states,
                              const std::vector<int>& prev_ids,
                              const std::vector<int>& intent_ids,
                              const std::vector<int>& emotion_ids, ad::Var step_mask,
                              const DecodeOverrides* overrides = nullptr) const;

  // Single-example operations (pure; values only).
  EncoderOutput encode_context(const std::vector<int>& context_ids) const;
  Eigen::VectorXd prior_intent(const EncoderOutput& enc) const;
  Eigen::VectorXd classify_emotion(const EncoderOutput& enc) const;
  /// Returns (c_att, weights) for a top-layer decoder state against raw
  /// encoder states (m x 2*encoder_hidden).
  std::pair<Eigen::VectorXd, Eigen::VectorXd> attend(const Eigen::VectorXd& state_top,
                                                     const Eigen::MatrixXd& encoder_states) const;
  DecoderState initial_state(const EncoderOutput& enc) const;
  std::pair<StepOutput, DecoderState> decode_step(int prev_token_id, const DecoderState& state,
                                                  const Eigen::MatrixXd& encoder_states,
                                                  int intent_id, int emotion_id,
                                                  const DecodeOverrides* overrides = nullptr) const;
  /// Greedy decoding. When intent_id is empty, each response samples its
  /// intent from the prior. Emotion is the argmax of the model's own
  /// emotion head.
  std::vector<GeneratedResponse> generate(const std::vector<int>& context_ids,
                                          std::optional<int> intent_id, int max_len, int count,
                                          RngStream& rng) const;

  void save(const std::filesystem::path& checkpoint, const std::filesystem::path& manifest,
            const std::string& vocab_hash, const std::string& keyword_hash,
            std::uint64_t seed) const;
  static EmphiModel load(const std::filesystem::path& checkpoint,
                         const std::filesystem::path& manifest);

  const std::string& vocab_hash() const { return vocab_hash_; }
  const std::string& keyword_hash() const { return keyword_hash_; }

 private:
  EncoderGraph wrap_encoder_states(ad::Graph& g, const Eigen::MatrixXd& states) const;

  ModelConfig config_;
  std::unique_ptr<nn::ParamStore> store_;

  nn::Tensor* embedding_ = nullptr;
  std::vector<nn::GruCell> enc_fwd_;
  std::vector<nn::GruCell> enc_bwd_;
  std::vector<nn::Linear> bridge_;
  nn::Tensor* intent_emb_ = nullptr;
  nn::Tensor* emotion_emb_ = nullptr;
  nn::Ffn2 prior_head_;
  nn::Ffn2 emotion_head_;
  nn::Tensor* att_Ws_ = nullptr;
  nn::Tensor* att_Uh_ = nullptr;
  nn::Tensor* att_b_ = nullptr;
  nn::Tensor* att_v_ = nullptr;
  std::vector<nn::GruCell> dec_;
  nn::Ffn2 gate_intent_net_;
  nn::Ffn2 gate_emotion_net_;
  nn::Tensor* copy_score_ = nullptr;  // v_s
  nn::Tensor* generic_head_ = nullptr;  // W_g
  nn::Tensor* intent_head_ = nullptr;   // W_i

  ad::Mat intent_token_mask_;  // 9 x V when set
  std::string vocab_hash_;
  std::string keyword_hash_;
};

}  // namespace emphi
