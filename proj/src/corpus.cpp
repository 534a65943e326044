#include "hclm/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "hclm/utf8.hpp"

namespace hclm {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f'; }

bool is_blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](char c) { return is_space(c); });
}

void split_tokens(const std::string& line, std::vector<std::string>& out) {
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
}

}  // namespace

DocBoundary default_boundary(CorpusFormat format) {
  return format == CorpusFormat::Raw ? DocBoundary::BlankLine : DocBoundary::PerFile;
}

std::vector<Document> documents_from_text(const std::string& text, DocBoundary boundary,
                                          const std::string& source) {
  std::vector<Document> docs;
  Document current;
  current.source = source;
  int doc_index = 0;
  auto flush = [&]() {
    if (!current.tokens.empty()) {
      current.source = source + "#" + std::to_string(doc_index++);
      docs.push_back(std::move(current));
      current = Document{};
    }
  };
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (boundary == DocBoundary::BlankLine && is_blank(line)) {
      flush();
      continue;
    }
    split_tokens(line, current.tokens);
  }
  flush();
  return docs;
}

std::vector<Document> load_corpus(const std::filesystem::path& path, CorpusFormat format) {
  return load_corpus(path, format, default_boundary(format));
}

std::vector<Document> load_corpus(const std::filesystem::path& path, CorpusFormat format,
                                  DocBoundary boundary) {
  (void)format;  // both formats are whitespace-tokenized; they differ in defaults only
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failure on corpus file: " + path.string());
  std::string text = buf.str();
  if (!utf8_valid(text)) throw IoError("invalid UTF-8 in corpus file: " + path.string());
  return documents_from_text(text, boundary, path.string());
}

Vocabulary build_char_vocab(const std::vector<Document>& train_docs, int min_count) {
  std::unordered_map<char32_t, std::size_t> counts;
  for (const Document& doc : train_docs)
    for (const std::string& tok : doc.tokens)
      for (char32_t cp : utf8_decode(tok)) ++counts[cp];

  std::vector<std::pair<char32_t, std::size_t>> kept;
  for (const auto& [cp, n] : counts)
    if (n >= static_cast<std::size_t>(min_count)) kept.emplace_back(cp, n);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;  // descending count
    return a.first < b.first;                              // ties by codepoint
  });

  std::vector<char32_t> chars;
  chars.reserve(kept.size());
  for (const auto& [cp, n] : kept) chars.push_back(cp);
  return Vocabulary::from_chars(chars);
}

std::unordered_set<std::string> word_types(const std::vector<Document>& docs) {
  std::unordered_set<std::string> types;
  for (const Document& doc : docs)
    for (const std::string& tok : doc.tokens) types.insert(tok);
  return types;
}

std::unordered_map<std::string, std::size_t> word_counts(const std::vector<Document>& docs) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const Document& doc : docs)
    for (const std::string& tok : doc.tokens) ++counts[tok];
  return counts;
}

CorpusStats compute_stats(const std::vector<Document>& docs,
                          const std::unordered_set<std::string>* reference_train_types) {
  CorpusStats stats;
  std::unordered_set<char32_t> char_set;
  std::unordered_set<std::string> type_set;
  std::size_t oov_tokens = 0;
  for (const Document& doc : docs) {
    for (const std::string& tok : doc.tokens) {
      ++stats.word_tokens;
      type_set.insert(tok);
      const auto cps = utf8_decode(tok);
      stats.characters += cps.size() + 1;  // one boundary character per token
      for (char32_t cp : cps) char_set.insert(cp);
      if (reference_train_types && reference_train_types->count(tok) == 0) ++oov_tokens;
    }
  }
  stats.char_types = char_set.size();
  stats.word_types = type_set.size();
  if (reference_train_types) {
    stats.oov_rate_pct = stats.word_tokens == 0
                             ? 0.0
                             : 100.0 * static_cast<double>(oov_tokens) /
                                   static_cast<double>(stats.word_tokens);
  }
  return stats;
}

std::map<std::size_t, std::size_t> oov_frequency_histogram(
    const std::vector<Document>& docs, const std::unordered_set<std::string>& train_types) {
  std::unordered_map<std::string, std::size_t> oov_counts;
  for (const Document& doc : docs)
    for (const std::string& tok : doc.tokens)
      if (train_types.count(tok) == 0) ++oov_counts[tok];
  std::map<std::size_t, std::size_t> histogram;
  for (const auto& [word, freq] : oov_counts) ++histogram[freq];
  return histogram;
}

std::size_t BatchPlan::total_tokens() const {
  std::size_t total = 0;
  for (const auto& stream : streams)
    for (const Segment& seg : stream) total += seg.len;
  return total;
}

BatchPlan make_batches(const std::vector<Document>& docs, int batch, std::size_t trunc) {
  if (batch < 1) throw ContractViolation("make_batches: batch must be >= 1");
  BatchPlan plan;
  plan.batch = batch;
  plan.streams.resize(static_cast<std::size_t>(batch));

  // Greedy least-loaded assignment in corpus order; ties go to the lowest
  // stream index, so the plan is deterministic.
  std::vector<std::size_t> load(static_cast<std::size_t>(batch), 0);
  for (int di = 0; di < static_cast<int>(docs.size()); ++di) {
    const std::size_t ntok = docs[static_cast<std::size_t>(di)].tokens.size();
    if (ntok == 0) continue;
    std::size_t target = 0;
    for (std::size_t s = 1; s < load.size(); ++s)
      if (load[s] < load[target]) target = s;
    load[target] += ntok;

    const std::size_t step = trunc == 0 ? ntok : trunc;
    for (std::size_t begin = 0; begin < ntok; begin += step) {
      Segment seg;
      seg.doc = di;
      seg.begin = begin;
      seg.len = std::min(step, ntok - begin);
      seg.carry_in = begin > 0;
      plan.streams[target].push_back(seg);
    }
  }
  return plan;
}

}  // namespace hclm
