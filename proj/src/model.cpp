#include "hclm/model.hpp"

#include <algorithm>
#include <cmath>

namespace hclm {

namespace {

void check_char_id(int id, int vocab_size, const char* where) {
  if (id < 0 || id >= vocab_size)
    throw ContractViolation(std::string(where) + ": unknown char id " + std::to_string(id));
}

}  // namespace

HclmParams HclmParams::create(int vocab_size, int d, const Initializer& init, Rng* rng) {
  HclmParams p;
  p.embedding = make_parameter({vocab_size, d}, init, rng, "embedding");
  p.enc = LstmParams::create(d, d, init, rng, "enc");
  p.ctx = LstmParams::create(d, d, init, rng, "ctx");
  p.dec = LstmParams::create(d, d, init, rng, "dec");
  p.w_dec = make_parameter({vocab_size, d}, init, rng, "w_dec");
  p.b_dec = make_parameter({vocab_size}, init, rng, "b_dec");
  return p;
}

void HclmParams::collect(std::vector<NamedTensor>& out) const {
  out.push_back({"embedding", embedding});
  enc.collect(out, "enc");
  ctx.collect(out, "ctx");
  dec.collect(out, "dec");
  out.push_back({"w_dec", w_dec});
  out.push_back({"b_dec", b_dec});
}

Tensor encode_word(std::span<const int> chars, const HclmParams& params,
                   const DropoutCtx& drop) {
  if (chars.empty()) throw ContractViolation("encode_word: empty character sequence");
  const int d = params.hidden_dim();
  LstmState state = LstmState::zeros(d);
  for (int id : chars) {
    check_char_id(id, params.vocab_size(), "encode_word");
    state = lstm_step(drop.apply(row(params.embedding, id)), state, params.enc);
  }
  return state.h;
}

ContextState context_step(const Tensor& word_vec, const ContextState& state,
                          const HclmParams& params) {
  if (word_vec.rank() != 1 || word_vec.dim(0) != params.hidden_dim())
    throw InvalidShapeError("context_step: word vector dimension mismatch");
  return {lstm_step(word_vec, state.state, params.ctx), state.step + 1};
}

Tensor word_logprob_lm(const Tensor& h_ctx, std::span<const int> target_with_eow,
                       const HclmParams& params, const DropoutCtx& drop) {
  if (target_with_eow.empty() || target_with_eow.back() != Vocabulary::kEow)
    throw ContractViolation("word_logprob_lm: target must end with EOW");
  for (std::size_t i = 0; i + 1 < target_with_eow.size(); ++i)
    if (target_with_eow[i] == Vocabulary::kEow)
      throw ContractViolation("word_logprob_lm: EOW inside the target");

  const int d = params.hidden_dim();
  LstmState state{h_ctx, make_zeros({d})};
  int input_id = Vocabulary::kBow;
  Tensor total = make_scalar(0.0);
  for (int target : target_with_eow) {
    check_char_id(target, params.vocab_size(), "word_logprob_lm");
    state = lstm_step(drop.apply(row(params.embedding, input_id)), state, params.dec);
    Tensor logits = add(matmul(params.w_dec, drop.apply(state.h)), params.b_dec);
    total = add(total, select(log_softmax(logits), target));
    input_id = target;
  }
  return total;
}

SampledWord sample_word(const Tensor& h_ctx, const HclmParams& params, int max_len,
                        double temperature, Rng& rng) {
  if (max_len < 1) throw ContractViolation("sample_word: max_len must be >= 1");
  NoGradGuard no_grad;
  const int d = params.hidden_dim();
  LstmState state{h_ctx, make_zeros({d})};
  SampledWord out;
  int input_id = Vocabulary::kBow;
  for (int step = 0; step <= max_len; ++step) {
    state = lstm_step(row(params.embedding, input_id), state, params.dec);
    Tensor log_probs = log_softmax(add(matmul(params.w_dec, state.h), params.b_dec));
    int next;
    if (temperature <= 0.0) {
      next = static_cast<int>(std::max_element(log_probs.values().begin(),
                                               log_probs.values().end()) -
                              log_probs.values().begin());
    } else {
      std::vector<double> probs(log_probs.size());
      double norm = 0.0;
      for (std::size_t i = 0; i < probs.size(); ++i) {
        probs[i] = std::exp(log_probs[i] / temperature);
        norm += probs[i];
      }
      double u = rng.uniform() * norm;
      next = static_cast<int>(probs.size()) - 1;
      for (std::size_t i = 0; i < probs.size(); ++i) {
        u -= probs[i];
        if (u < 0.0) {
          next = static_cast<int>(i);
          break;
        }
      }
    }
    if (next == Vocabulary::kEow) {
      out.terminated = true;
      return out;
    }
    if (static_cast<int>(out.chars.size()) == max_len) return out;  // unterminated
    out.chars.push_back(next);
    input_id = next;
  }
  return out;
}

CharLstmParams CharLstmParams::create(int vocab_size, int d, const Initializer& init,
                                      Rng* rng) {
  CharLstmParams p;
  p.embedding = make_parameter({vocab_size, d}, init, rng, "embedding");
  p.rnn = LstmParams::create(d, d, init, rng, "rnn");
  p.w_out = make_parameter({vocab_size, d}, init, rng, "w_out");
  p.b_out = make_parameter({vocab_size}, init, rng, "b_out");
  return p;
}

void CharLstmParams::collect(std::vector<NamedTensor>& out) const {
  out.push_back({"embedding", embedding});
  rnn.collect(out, "rnn");
  out.push_back({"w_out", w_out});
  out.push_back({"b_out", b_out});
}

BaselineStep baseline_char_step(int char_id, const LstmState& state,
                                const CharLstmParams& params, const DropoutCtx& drop) {
  check_char_id(char_id, params.vocab_size(), "baseline_char_step");
  LstmState next = lstm_step(drop.apply(row(params.embedding, char_id)), state, params.rnn);
  Tensor log_probs = log_softmax(add(matmul(params.w_out, drop.apply(next.h)), params.b_out));
  return {next, log_probs};
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::LstmBaseline:
      return "lstm-baseline";
    case ModelKind::Hclm:
      return "hclm";
    case ModelKind::HclmCache:
      return "hclm-cache";
  }
  return "hclm-cache";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "lstm-baseline") return ModelKind::LstmBaseline;
  if (name == "hclm") return ModelKind::Hclm;
  if (name == "hclm-cache") return ModelKind::HclmCache;
  throw ConfigError("unknown model kind: " + name);
}

Model Model::create(ModelKind kind, const Vocabulary& vocab, int d,
                    std::size_t cache_capacity, const Initializer& init, Rng* rng) {
  Model m;
  m.kind = kind;
  m.d = d;
  m.vocab = vocab;
  m.cache_capacity = kind == ModelKind::HclmCache ? cache_capacity : 0;
  if (kind == ModelKind::LstmBaseline) {
    m.baseline = CharLstmParams::create(vocab.size(), d, init, rng);
  } else {
    m.hclm = HclmParams::create(vocab.size(), d, init, rng);
    if (kind == ModelKind::HclmCache) {
      if (cache_capacity == 0)
        throw ContractViolation("Model: hclm-cache needs a positive cache capacity");
      m.cache = CacheParams::create(d, init, rng);
      m.gate = GateParams::create(d, init, rng);
    }
  }
  return m;
}

std::vector<NamedTensor> Model::named_params() const {
  std::vector<NamedTensor> out;
  if (baseline) baseline->collect(out);
  if (hclm) hclm->collect(out);
  if (cache) cache->collect(out);
  if (gate) gate->collect(out);
  return out;
}

void Model::zero_grads() const {
  for (auto& p : named_params()) p.tensor.node()->zero_grad();
}

}  // namespace hclm
