#include "hclm/evaluator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>

namespace hclm {

EvalReport make_report(double nll_nats, std::size_t characters, std::size_t tokens) {
  EvalReport r;
  r.nll_nats = nll_nats;
  r.characters = characters;
  r.tokens = tokens;
  const double ln2 = std::log(2.0);
  r.bpc = characters == 0 ? 0.0 : nll_nats / (ln2 * static_cast<double>(characters));
  r.word_perplexity =
      tokens == 0 ? 1.0
                  : std::pow(2.0, nll_nats / (ln2 * static_cast<double>(tokens)));
  return r;
}

namespace {

struct DocResult {
  double nll = 0.0;
  std::size_t chars = 0;
  std::size_t tokens = 0;
  std::vector<StepRecord> steps;
};

DocResult evaluate_document(const Model& model, const Document& doc, int doc_index,
                            const EvalOptions& options) {
  DocResult result;
  auto scorer = make_scorer(model, DropoutCtx::off());
  scorer->reset_document();
  const std::size_t n = doc.tokens.size();
  const std::size_t step = options.trunc == 0 ? (n == 0 ? 1 : n) : options.trunc;
  std::size_t pos = 0;
  for (std::size_t begin = 0; begin < n; begin += step) {
    const std::size_t len = std::min(step, n - begin);
    SegmentScore score = score_segment(
        *scorer, std::span<const std::string>(doc.tokens.data() + begin, len),
        options.record_steps);
    result.nll += score.nll;
    result.chars += score.chars;
    result.tokens += len;
    scorer->detach_state();
    if (options.record_steps)
      for (auto& out : score.steps) {
        if (!std::isfinite(out.log_p_mix))
          throw ImpossibleEventError("evaluate: token received zero probability");
        result.steps.push_back({std::move(out), doc_index, pos++});
      }
  }
  if (!std::isfinite(result.nll))
    throw ImpossibleEventError("evaluate: document received zero probability");
  return result;
}

}  // namespace

EvalResult evaluate(const Model& model, const std::vector<Document>& docs,
                    const EvalOptions& options) {
  std::vector<DocResult> per_doc(docs.size());
  const int threads = std::max(1, options.threads);
  if (threads == 1 || docs.size() <= 1) {
    for (std::size_t i = 0; i < docs.size(); ++i)
      per_doc[i] = evaluate_document(model, docs[i], static_cast<int>(i), options);
  } else {
    // Documents are independent; parameters are read-only here. Totals are
    // reduced in document order below, so thread count never changes results.
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    auto worker = [&]() {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= docs.size()) return;
        try {
          per_doc[i] = evaluate_document(model, docs[i], static_cast<int>(i), options);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
  }

  EvalResult result;
  double nll = 0.0;
  std::size_t chars = 0, tokens = 0;
  for (auto& d : per_doc) {
    nll += d.nll;
    chars += d.chars;
    tokens += d.tokens;
    for (auto& s : d.steps) result.steps.push_back(std::move(s));
  }
  result.report = make_report(nll, chars, tokens);
  return result;
}

std::vector<TypePosterior> type_posteriors(
    const std::vector<StepRecord>& steps,
    const std::unordered_map<std::string, std::size_t>& train_counts) {
  struct Acc {
    double sum = 0.0;
    std::size_t count = 0;
  };
  std::map<std::string, Acc> acc;  // ordered for reproducible output
  std::unordered_set<std::string> seen_in_doc;
  int current_doc = -1;
  for (const StepRecord& rec : steps) {
    if (rec.doc != current_doc) {
      current_doc = rec.doc;
      seen_in_doc.clear();
    }
    if (seen_in_doc.insert(rec.out.word).second) continue;  // first occurrence in scope
    Acc& a = acc[rec.out.word];
    a.sum += rec.out.copied_posterior;
    a.count += 1;
  }
  std::vector<TypePosterior> out;
  out.reserve(acc.size());
  for (const auto& [word, a] : acc) {
    TypePosterior tp;
    tp.word = word;
    tp.count = a.count;
    tp.mean_posterior = a.sum / static_cast<double>(a.count);
    auto it = train_counts.find(word);
    tp.train_count = it == train_counts.end() ? 0 : it->second;
    out.push_back(std::move(tp));
  }
  return out;
}

RareWordTables rare_word_table(const std::vector<TypePosterior>& posteriors,
                               std::size_t max_train_count, std::size_t top_n) {
  std::vector<TypePosterior> rare;
  for (const auto& tp : posteriors)
    if (tp.train_count < max_train_count) rare.push_back(tp);
  auto by_posterior_desc = [](const TypePosterior& a, const TypePosterior& b) {
    if (a.mean_posterior != b.mean_posterior) return a.mean_posterior > b.mean_posterior;
    return a.word < b.word;
  };
  std::sort(rare.begin(), rare.end(), by_posterior_desc);
  RareWordTables tables;
  for (std::size_t i = 0; i < rare.size() && i < top_n; ++i) tables.top.push_back(rare[i]);
  for (std::size_t i = 0; i < rare.size() && i < top_n; ++i)
    tables.bottom.push_back(rare[rare.size() - 1 - i]);
  return tables;
}

std::vector<std::pair<std::size_t, double>> posterior_frequency_scatter(
    const std::vector<TypePosterior>& posteriors,
    const std::unordered_map<std::string, std::size_t>& test_counts,
    const std::unordered_set<std::string>& train_types) {
  std::vector<std::pair<std::size_t, double>> pairs;
  for (const auto& tp : posteriors) {
    if (train_types.count(tp.word) != 0) continue;
    auto it = test_counts.find(tp.word);
    const std::size_t freq = it == test_counts.end() ? 0 : it->second;
    pairs.emplace_back(freq, tp.mean_posterior);
  }
  return pairs;
}

namespace {

std::vector<double> ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> rank(xs.size(), 0.0);
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
    i = j + 1;
  }
  return rank;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2)
    throw ContractViolation("spearman: need two equal-length series of size >= 2");
  const std::vector<double> ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) return 0.0;
  return cov / std::sqrt(va * vb);
}

}  // namespace hclm
