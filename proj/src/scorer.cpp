#include "hclm/scorer.hpp"

#include <cmath>

#include "hclm/utf8.hpp"

namespace hclm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double logistic_value(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

class HclmScorer final : public WordScorer {
 public:
  HclmScorer(const Model& model, const DropoutCtx& drop)
      : model_(model),
        drop_(drop),
        ctx_(ContextState::initial(model.d)),
        cache_(model.kind == ModelKind::HclmCache ? model.cache_capacity : 1) {
    if (!model.hclm) throw ContractViolation("HclmScorer: model has no hierarchical params");
    use_cache_ = model.kind == ModelKind::HclmCache;
  }

  Scored score_word(const std::string& word) override {
    const HclmParams& params = *model_.hclm;
    std::vector<int> ids = model_.vocab.encode(word);
    if (ids.empty()) throw ContractViolation("score_word: empty word");
    std::vector<int> target = ids;
    target.push_back(Vocabulary::kEow);

    const Tensor h_ctx = ctx_.state.h;
    Tensor log_p_lm = word_logprob_lm(h_ctx, target, params, drop_);

    Scored scored;
    scored.out.word = word;
    scored.out.log_p_lm = log_p_lm.item();
    scored.chars = ids.size() + 1;

    Tensor log_p_mix = log_p_lm;
    if (use_cache_ && !cache_.empty()) {
      Tensor query = query_vector(drop_.apply(h_ctx), *model_.cache);
      Tensor log_mem = log_softmax(copy_scores(query, cache_, *model_.cache));
      Tensor gamma = gate_gamma(drop_.apply(h_ctx), *model_.gate);
      std::optional<Tensor> log_p_ptr;
      if (auto idx = cache_.find(word)) log_p_ptr = select(log_mem, static_cast<int>(*idx));
      log_p_mix = mix_logprob(log_p_lm, log_p_ptr, gamma);

      const double lambda = logistic_value(gamma.item());
      scored.out.lambda = lambda;
      scored.out.log_p_ptr = log_p_ptr ? log_p_ptr->item() : kNegInf;
      scored.out.log_p_mix = log_p_mix.item();
      const double p_ptr_w = log_p_ptr ? std::exp(scored.out.log_p_ptr) : 0.0;
      scored.out.copied_posterior =
          posterior_copy(lambda, p_ptr_w, std::exp(scored.out.log_p_mix));
    } else {
      // Empty (or absent) cache: the mixture degenerates to the LM exactly.
      scored.out.lambda = 1.0;
      scored.out.log_p_ptr = kNegInf;
      scored.out.log_p_mix = scored.out.log_p_lm;
      scored.out.copied_posterior = 0.0;
    }

    if (use_cache_) cache_.insert(word, h_ctx);
    Tensor word_vec = encode_word(ids, params, drop_);
    ctx_ = context_step(drop_.apply(word_vec), ctx_, params);

    scored.neg_log_p = neg(log_p_mix);
    return scored;
  }

  void reset_document() override {
    ctx_ = ContextState::initial(model_.d);
    cache_.reset();
  }

  void detach_state() override {
    ctx_.state = ctx_.state.detached();
    cache_.detach_keys();
  }

  Cache& cache() { return cache_; }
  const ContextState& context() const { return ctx_; }

 private:
  const Model& model_;
  DropoutCtx drop_;
  ContextState ctx_;
  Cache cache_;
  bool use_cache_ = false;
};

class BaselineScorer final : public WordScorer {
 public:
  BaselineScorer(const Model& model, const DropoutCtx& drop)
      : model_(model), drop_(drop), state_(LstmState::zeros(model.d)) {
    if (!model.baseline) throw ContractViolation("BaselineScorer: model has no baseline params");
  }

  Scored score_word(const std::string& word) override {
    std::vector<int> ids = model_.vocab.encode(word);
    if (ids.empty()) throw ContractViolation("score_word: empty word");
    std::vector<int> target = ids;
    target.push_back(Vocabulary::kEow);

    Tensor total = make_scalar(0.0);
    for (int t : target) {
      BaselineStep step = baseline_char_step(prev_id_, state_, *model_.baseline, drop_);
      state_ = step.state;
      total = add(total, select(step.log_probs, t));
      prev_id_ = t;
    }

    Scored scored;
    scored.out.word = word;
    scored.out.log_p_lm = total.item();
    scored.out.log_p_ptr = kNegInf;
    scored.out.lambda = 1.0;
    scored.out.log_p_mix = scored.out.log_p_lm;
    scored.out.copied_posterior = 0.0;
    scored.chars = ids.size() + 1;
    scored.neg_log_p = neg(total);
    return scored;
  }

  void reset_document() override {
    state_ = LstmState::zeros(model_.d);
    prev_id_ = Vocabulary::kBow;
  }

  void detach_state() override { state_ = state_.detached(); }

 private:
  const Model& model_;
  DropoutCtx drop_;
  LstmState state_;
  int prev_id_ = Vocabulary::kBow;
};

}  // namespace

std::unique_ptr<WordScorer> make_scorer(const Model& model, const DropoutCtx& drop) {
  if (model.kind == ModelKind::LstmBaseline)
    return std::make_unique<BaselineScorer>(model, drop);
  return std::make_unique<HclmScorer>(model, drop);
}

namespace {

// Draw from the decoder, rejecting the (rare, corpus-impossible) empty word;
// the result is distributed as p(w | w nonempty).
std::vector<int> sample_nonempty_chars(const Tensor& h_ctx, const HclmParams& params,
                                       int max_len, double temperature, Rng& rng) {
  for (int attempt = 0; attempt < 8; ++attempt) {
    SampledWord w = sample_word(h_ctx, params, max_len, temperature, rng);
    if (!w.chars.empty()) return w.chars;
  }
  SampledWord fallback = sample_word(h_ctx, params, max_len, 0.0, rng);
  if (!fallback.chars.empty()) return fallback.chars;
  return {Vocabulary::kRare};
}

}  // namespace

std::vector<std::string> sample_text(const Model& model, int n_words, double temperature,
                                     int max_word_len, Rng& rng) {
  if (n_words < 0) throw ContractViolation("sample_text: negative word count");
  NoGradGuard no_grad;
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(n_words));

  if (model.kind == ModelKind::LstmBaseline) {
    const CharLstmParams& params = *model.baseline;
    LstmState state = LstmState::zeros(model.d);
    int input = Vocabulary::kBow;
    std::string word;
    int emitted = 0;
    while (static_cast<int>(out.size()) < n_words && emitted < n_words * (max_word_len + 2)) {
      BaselineStep step = baseline_char_step(input, state, params);
      state = step.state;
      int next;
      if (temperature <= 0.0) {
        next = static_cast<int>(std::max_element(step.log_probs.values().begin(),
                                                 step.log_probs.values().end()) -
                                step.log_probs.values().begin());
      } else {
        double norm = 0.0;
        std::vector<double> probs(step.log_probs.size());
        for (std::size_t i = 0; i < probs.size(); ++i) {
          probs[i] = std::exp(step.log_probs[i] / temperature);
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
      ++emitted;
      if (next == Vocabulary::kEow) {
        if (!word.empty()) out.push_back(word);
        word.clear();
      } else if (static_cast<int>(word.size()) < 4 * max_word_len) {
        word += model.vocab.display(next);
      }
      input = next;
    }
    while (static_cast<int>(out.size()) < n_words) out.push_back(model.vocab.display(Vocabulary::kRare));
    return out;
  }

  const HclmParams& params = *model.hclm;
  ContextState ctx = ContextState::initial(model.d);
  Cache cache(model.kind == ModelKind::HclmCache ? model.cache_capacity : 1);
  const bool use_cache = model.kind == ModelKind::HclmCache;

  for (int t = 0; t < n_words; ++t) {
    const Tensor h_ctx = ctx.state.h;
    std::string word;
    std::vector<int> chars;
    bool copied = false;
    if (use_cache && !cache.empty()) {
      Tensor gamma = gate_gamma(h_ctx, *model.gate);
      const double lambda = 1.0 / (1.0 + std::exp(-gamma.item()));
      const bool from_lm = temperature <= 0.0 ? lambda >= 0.5 : rng.uniform() < lambda;
      if (!from_lm) {
        Tensor mem = p_mem(copy_scores(query_vector(h_ctx, *model.cache), cache, *model.cache));
        std::size_t slot;
        if (temperature <= 0.0) {
          slot = static_cast<std::size_t>(
              std::max_element(mem.values().begin(), mem.values().end()) -
              mem.values().begin());
        } else {
          double u = rng.uniform();
          slot = mem.size() - 1;
          for (std::size_t i = 0; i < mem.size(); ++i) {
            u -= mem[i];
            if (u < 0.0) {
              slot = i;
              break;
            }
          }
        }
        word = cache.slots()[slot].word;
        chars = model.vocab.encode(word);
        copied = true;
      }
    }
    if (!copied) {
      chars = sample_nonempty_chars(h_ctx, params, max_word_len, temperature, rng);
      word = model.vocab.decode(chars);
    }
    out.push_back(word);
    if (use_cache) cache.insert(word, h_ctx);
    ctx = context_step(encode_word(chars, params), ctx, params);
  }
  return out;
}

SegmentScore score_segment(WordScorer& scorer, std::span<const std::string> words,
                           bool collect_steps) {
  if (words.empty()) throw ContractViolation("score_segment: empty segment");
  SegmentScore result;
  std::vector<Tensor> losses;
  losses.reserve(words.size());
  for (const std::string& word : words) {
    WordScorer::Scored scored = scorer.score_word(word);
    losses.push_back(scored.neg_log_p);
    result.nll += -scored.out.log_p_mix;
    result.chars += scored.chars;
    if (collect_steps) result.steps.push_back(std::move(scored.out));
  }
  result.loss = losses.size() == 1 ? losses.front() : sum(concat(losses));
  return result;
}

}  // namespace hclm
