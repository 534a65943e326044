#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "hclm/corpus.hpp"
#include "hclm/model.hpp"
#include "hclm/scorer.hpp"

namespace hclm {

struct EvalReport {
  double nll_nats = 0.0;
  std::size_t characters = 0;  // |c|: token codepoints + one boundary per token
  std::size_t tokens = 0;
  double bpc = 0.0;              // nll / (ln 2 * |c|)
  double word_perplexity = 0.0;  // 2^(nll / (ln 2 * tokens))
};

struct StepRecord {
  StepOutput out;
  int doc = 0;
  std::size_t pos = 0;
};

struct EvalResult {
  EvalReport report;
  std::vector<StepRecord> steps;  // filled when record_steps is set
};

struct EvalOptions {
  bool record_steps = false;
  // Words per carried segment; 0 streams each document in one pass. The
  // report is identical either way.
  std::size_t trunc = 0;
  int threads = 1;  // documents are independent; totals reduce in doc order
};

// Teacher-forced evaluation with dropout off; context and cache reset at
// every document boundary. Throws ImpossibleEventError if a token gets zero
// probability.
EvalResult evaluate(const Model& model, const std::vector<Document>& docs,
                    const EvalOptions& options = {});

EvalReport make_report(double nll_nats, std::size_t characters, std::size_t tokens);

// --- Posterior analyses -------------------------------------------------------

struct TypePosterior {
  std::string word;
  std::size_t count = 0;        // occurrences kept (first occurrence per document excluded)
  double mean_posterior = 0.0;  // mean p(z|w) over the kept occurrences
  std::size_t train_count = 0;
};

// Groups recorded steps by word type, drops each type's first occurrence
// within each document (a first occurrence after a cache reset cannot be
// copied), and averages the rest. Types with no kept occurrence are excluded.
std::vector<TypePosterior> type_posteriors(
    const std::vector<StepRecord>& steps,
    const std::unordered_map<std::string, std::size_t>& train_counts);

struct RareWordTables {
  std::vector<TypePosterior> top;     // by mean posterior, descending
  std::vector<TypePosterior> bottom;  // ascending
};

// Filters types occurring fewer than max_train_count times in training.
RareWordTables rare_word_table(const std::vector<TypePosterior>& posteriors,
                               std::size_t max_train_count, std::size_t top_n);

// (test frequency, mean posterior) per type absent from training.
std::vector<std::pair<std::size_t, double>> posterior_frequency_scatter(
    const std::vector<TypePosterior>& posteriors,
    const std::unordered_map<std::string, std::size_t>& test_counts,
    const std::unordered_set<std::string>& train_types);

// Spearman rank correlation with average ranks on ties.
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace hclm
