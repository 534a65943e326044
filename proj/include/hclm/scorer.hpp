#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hclm/model.hpp"

namespace hclm {

// Teacher-forced word scoring over one stream. A scorer owns the per-stream
// state (context LSTM, cache, previous symbol); the trainer and the evaluator
// drive the same implementation so that carried-state semantics cannot drift
// between them.
class WordScorer {
 public:
  virtual ~WordScorer() = default;

  struct Scored {
    StepOutput out;
    Tensor neg_log_p;  // graph scalar, -log p_mix(word)
    std::size_t chars = 0;  // codepoints + 1 boundary symbol
  };

  // Scores the next gold word given the current state, then folds the word
  // into the state (cache insert before the context advance, so a word can be
  // copied only at or after its second occurrence).
  virtual Scored score_word(const std::string& word) = 0;

  virtual void reset_document() = 0;
  // Segment boundary: states carry forward as constants, gradients stop here.
  virtual void detach_state() = 0;
};

std::unique_ptr<WordScorer> make_scorer(const Model& model, const DropoutCtx& drop);

struct SegmentScore {
  Tensor loss;  // sum over tokens of -log p_mix
  double nll = 0.0;
  std::size_t chars = 0;
  std::vector<StepOutput> steps;
};

SegmentScore score_segment(WordScorer& scorer, std::span<const std::string> words,
                           bool collect_steps);

// Ancestral text generation. For the cache model each word is drawn from the
// mixture: with probability lambda from the character decoder, otherwise by
// copying a cached word from the slot distribution; generated words feed the
// cache and context exactly like teacher-forced scoring. temperature == 0
// makes every choice an argmax, so the output is deterministic.
std::vector<std::string> sample_text(const Model& model, int n_words, double temperature,
                                     int max_word_len, Rng& rng);

}  // namespace hclm
