#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hclm/cache.hpp"
#include "hclm/lstm.hpp"
#include "hclm/mixture.hpp"
#include "hclm/tensor.hpp"
#include "hclm/vocab.hpp"

namespace hclm {

// Dropout is applied on the non-recurrent connections only: character
// embeddings into each LSTM, the encoder output into the context LSTM, the
// decoder output into the softmax, and the context state into the gate and
// cache query. An inactive context (rate 0 or no rng) is the identity.
struct DropoutCtx {
  double rate = 0.0;
  Rng* rng = nullptr;

  Tensor apply(const Tensor& t) const { return dropout(t, rate, rng); }
  static DropoutCtx off() { return {}; }
};

// Hierarchical model: character encoder -> word-level context -> character
// decoder with a softmax over the character inventory.
struct HclmParams {
  Tensor embedding;  // {|V_c|, d}
  LstmParams enc, ctx, dec;
  Tensor w_dec;  // {|V_c|, d}
  Tensor b_dec;  // {|V_c|}

  int hidden_dim() const { return embedding.dim(1); }
  int vocab_size() const { return embedding.dim(0); }

  static HclmParams create(int vocab_size, int d, const Initializer& init, Rng* rng);
  void collect(std::vector<NamedTensor>& out) const;
};

struct ContextState {
  LstmState state;
  long step = 0;  // number of words consumed

  static ContextState initial(int d) { return {LstmState::zeros(d), 0}; }
};

// Final encoder hidden state over the word's characters (terminator excluded).
Tensor encode_word(std::span<const int> chars, const HclmParams& params,
                   const DropoutCtx& drop = {});

ContextState context_step(const Tensor& word_vec, const ContextState& state,
                          const HclmParams& params);

// Sum over target characters of log softmax(W_dec h_dec + b_dec); the target
// must end with EOW and contain it exactly once. The decoder starts from
// h0 = h_ctx, c0 = 0 and consumes the begin-of-word embedding first.
Tensor word_logprob_lm(const Tensor& h_ctx, std::span<const int> target_with_eow,
                       const HclmParams& params, const DropoutCtx& drop = {});

struct SampledWord {
  std::vector<int> chars;  // terminator excluded
  bool terminated = false;
};

// Ancestral sampling from the decoder until EOW or max_len characters.
// temperature == 0 takes the argmax at every step.
SampledWord sample_word(const Tensor& h_ctx, const HclmParams& params, int max_len,
                        double temperature, Rng& rng);

// Flat character-level LSTM over the raw stream; the word boundary is an
// explicit character (EOW doubles as the whitespace symbol), so bpc is
// directly comparable with the hierarchical model.
struct CharLstmParams {
  Tensor embedding;  // {|V_c|, d}
  LstmParams rnn;
  Tensor w_out;  // {|V_c|, d}
  Tensor b_out;  // {|V_c|}

  int hidden_dim() const { return embedding.dim(1); }
  int vocab_size() const { return embedding.dim(0); }

  static CharLstmParams create(int vocab_size, int d, const Initializer& init, Rng* rng);
  void collect(std::vector<NamedTensor>& out) const;
};

struct BaselineStep {
  LstmState state;
  Tensor log_probs;  // log distribution over the character inventory
};

BaselineStep baseline_char_step(int char_id, const LstmState& state,
                                const CharLstmParams& params, const DropoutCtx& drop = {});

// --- Whole-model container ---------------------------------------------------

enum class ModelKind { LstmBaseline, Hclm, HclmCache };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

struct Model {
  ModelKind kind = ModelKind::HclmCache;
  int d = 0;
  std::size_t cache_capacity = 0;  // used by HclmCache
  Vocabulary vocab;

  std::optional<HclmParams> hclm;          // Hclm, HclmCache
  std::optional<CacheParams> cache;        // HclmCache
  std::optional<GateParams> gate;          // HclmCache
  std::optional<CharLstmParams> baseline;  // LstmBaseline

  static Model create(ModelKind kind, const Vocabulary& vocab, int d,
                      std::size_t cache_capacity, const Initializer& init, Rng* rng);

  std::vector<NamedTensor> named_params() const;
  void zero_grads() const;
};

}  // namespace hclm
