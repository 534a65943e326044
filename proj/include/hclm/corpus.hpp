#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "hclm/vocab.hpp"

namespace hclm {

struct Document {
  std::vector<std::string> tokens;  // nonempty, no internal whitespace
  std::string source;
};

enum class CorpusFormat { Ptb, Raw };
enum class DocBoundary { PerFile, BlankLine };

// Default document boundary for a format: ptb reads each file as one
// contiguous stream, raw treats blank lines as article separators.
DocBoundary default_boundary(CorpusFormat format);

// Whitespace tokenization of UTF-8 text; ptb input is pre-tokenized and
// lowercased upstream, raw keeps case and punctuation tokens as they come.
// Tokens such as "<unk>" are kept verbatim (they are later spelled out
// character by character like any other word).
std::vector<Document> load_corpus(const std::filesystem::path& path, CorpusFormat format);
std::vector<Document> load_corpus(const std::filesystem::path& path, CorpusFormat format,
                                  DocBoundary boundary);
std::vector<Document> documents_from_text(const std::string& text, DocBoundary boundary,
                                          const std::string& source);

// Characters occurring fewer than min_count times map to the rare dummy.
Vocabulary build_char_vocab(const std::vector<Document>& train_docs, int min_count);

struct CorpusStats {
  std::size_t char_types = 0;
  std::size_t word_types = 0;
  std::size_t word_tokens = 0;
  // Sum of token codepoints plus one boundary character per token; equals the
  // bpc denominator |c|.
  std::size_t characters = 0;
  // Percent of tokens whose type is absent from the reference training set.
  std::optional<double> oov_rate_pct;
};

CorpusStats compute_stats(const std::vector<Document>& docs,
                          const std::unordered_set<std::string>* reference_train_types);

std::unordered_set<std::string> word_types(const std::vector<Document>& docs);
std::unordered_map<std::string, std::size_t> word_counts(const std::vector<Document>& docs);

// For each word type absent from the training set, its frequency in `docs`;
// returned as histogram frequency -> number of types.
std::map<std::size_t, std::size_t> oov_frequency_histogram(
    const std::vector<Document>& docs, const std::unordered_set<std::string>& train_types);

struct Segment {
  int doc = 0;            // index into docs
  std::size_t begin = 0;  // token offset
  std::size_t len = 0;
  bool carry_in = false;  // carries context/cache state from the previous segment
};

struct BatchPlan {
  int batch = 1;
  std::vector<std::vector<Segment>> streams;  // one segment list per stream

  std::size_t total_tokens() const;
};

// Assigns documents to B streams (greedy least-loaded, deterministic) and
// splits each document into segments of at most T words. Truncation never
// splits a word; state carries across consecutive segments of one document
// and resets at document boundaries. T == 0 means no truncation.
BatchPlan make_batches(const std::vector<Document>& docs, int batch, std::size_t trunc);

}  // namespace hclm
