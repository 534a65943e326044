#include <doctest.h>

#include <cmath>

#include "hclm/corpus.hpp"
#include "hclm/evaluator.hpp"
#include "test_util.hpp"

using namespace hclm;
using namespace hclm::testutil;

TEST_CASE("tokenization") {
  SUBCASE("a ptb line splits on whitespace") {
    auto docs = documents_from_text("the cat .\n", DocBoundary::PerFile, "t");
    REQUIRE(docs.size() == 1);
    CHECK(docs[0].tokens == std::vector<std::string>{"the", "cat", "."});
  }
  SUBCASE("<unk> tokens are kept verbatim") {
    auto docs = documents_from_text("a <unk> b\n", DocBoundary::PerFile, "t");
    CHECK(docs[0].tokens[1] == "<unk>");
  }
  SUBCASE("empty text yields zero documents") {
    CHECK(documents_from_text("", DocBoundary::PerFile, "t").empty());
    CHECK(documents_from_text("\n  \n\n", DocBoundary::BlankLine, "t").empty());
  }
  SUBCASE("blank lines separate documents in raw format") {
    auto docs = documents_from_text("one two\n\nthree\nfour\n\n\nfive\n",
                                    DocBoundary::BlankLine, "t");
    REQUIRE(docs.size() == 3);
    CHECK(docs[0].tokens == std::vector<std::string>{"one", "two"});
    CHECK(docs[1].tokens == std::vector<std::string>{"three", "four"});
    CHECK(docs[2].tokens == std::vector<std::string>{"five"});
  }
  SUBCASE("per-file boundary keeps everything together") {
    auto docs = documents_from_text("one two\n\nthree\n", DocBoundary::PerFile, "t");
    REQUIRE(docs.size() == 1);
    CHECK(docs[0].tokens.size() == 3);
  }
}

TEST_CASE("load_corpus errors") {
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_corpus("/nonexistent/corpus.txt", CorpusFormat::Ptb), IoError);
  }
  SUBCASE("invalid UTF-8") {
    auto dir = temp_dir("badutf8");
    write_file(dir / "bad.txt", std::string("ok \xFF\xFE bad\n"));
    CHECK_THROWS_AS(load_corpus(dir / "bad.txt", CorpusFormat::Raw), IoError);
  }
}

TEST_CASE("build_char_vocab") {
  SUBCASE("threshold maps rare chars to the dummy") {
    std::vector<Document> docs{make_doc({"aaab"})};
    Vocabulary v = build_char_vocab(docs, 2);
    CHECK(v.size() == 4);  // specials + 'a'
    CHECK(v.has_char(U'a'));
    CHECK_FALSE(v.has_char(U'b'));
    CHECK(v.id_of(U'b') == Vocabulary::kRare);
  }
  SUBCASE("min_count 1 keeps every observed char") {
    std::vector<Document> docs{make_doc({"abc", "d"})};
    Vocabulary v = build_char_vocab(docs, 1);
    CHECK(v.size() == 7);
  }
  SUBCASE("ids are ordered by count then codepoint") {
    // b occurs 3x, a and c 2x each: b first, then a before c.
    std::vector<Document> docs{make_doc({"ba", "bc", "bac"})};
    Vocabulary v = build_char_vocab(docs, 1);
    CHECK(v.id_of(U'b') == Vocabulary::kNumSpecials);
    CHECK(v.id_of(U'a') == Vocabulary::kNumSpecials + 1);
    CHECK(v.id_of(U'c') == Vocabulary::kNumSpecials + 2);
  }
  SUBCASE("determinism") {
    std::vector<Document> docs{make_doc({"xyzzy", "plugh", "xyzzy"})};
    Vocabulary a = build_char_vocab(docs, 1);
    Vocabulary b = build_char_vocab(docs, 1);
    CHECK(a == b);
  }
}

TEST_CASE("compute_stats") {
  // Hand-verified fixture: 3 documents.
  //   doc1: "ab ab cd"   tokens 3, chars 6+3=9
  //   doc2: "ab"         tokens 1, chars 2+1=3
  //   doc3: "xy cd cd"   tokens 3, chars 6+3=9
  // word types: ab, cd, xy (3); char types: a,b,c,d,x,y (6)
  // tokens 7, characters 21
  std::vector<Document> docs{make_doc({"ab", "ab", "cd"}), make_doc({"ab"}),
                             make_doc({"xy", "cd", "cd"})};
  SUBCASE("counts match hand computation exactly") {
    CorpusStats s = compute_stats(docs, nullptr);
    CHECK(s.word_tokens == 7);
    CHECK(s.word_types == 3);
    CHECK(s.char_types == 6);
    CHECK(s.characters == 21);
    CHECK_FALSE(s.oov_rate_pct.has_value());
  }
  SUBCASE("a corpus against itself has zero OOV rate") {
    auto types = word_types(docs);
    CorpusStats s = compute_stats(docs, &types);
    REQUIRE(s.oov_rate_pct.has_value());
    CHECK(*s.oov_rate_pct == 0.0);
  }
  SUBCASE("token-level OOV rate") {
    // Reference training set {ab, cd}: doc3's "xy" is the only OOV token.
    std::unordered_set<std::string> train{"ab", "cd"};
    CorpusStats s = compute_stats(docs, &train);
    CHECK(*s.oov_rate_pct == doctest::Approx(100.0 / 7.0));
  }
}

TEST_CASE("oov_frequency_histogram") {
  std::unordered_set<std::string> train{"the", "cat"};
  SUBCASE("no OOVs gives an empty histogram") {
    std::vector<Document> docs{make_doc({"the", "cat"})};
    CHECK(oov_frequency_histogram(docs, train).empty());
  }
  SUBCASE("one OOV type appearing three times") {
    std::vector<Document> docs{make_doc({"zork", "the", "zork", "zork"})};
    auto h = oov_frequency_histogram(docs, train);
    REQUIRE(h.size() == 1);
    CHECK(h.at(3) == 1);
  }
  SUBCASE("synthetic power-law sample is monotone decreasing in frequency") {
    // Zipf-like OOV corpus: type k gets ~N/k occurrences.
    std::vector<std::string> tokens;
    for (int k = 1; k <= 40; ++k) {
      const int reps = 120 / k;
      for (int r = 0; r < reps; ++r) tokens.push_back("w" + std::to_string(k));
    }
    std::vector<Document> docs{make_doc(tokens)};
    auto h = oov_frequency_histogram(docs, {});
    std::vector<double> freqs, counts;
    for (const auto& [freq, types] : h) {
      if (freq < 2) continue;
      freqs.push_back(static_cast<double>(freq));
      counts.push_back(static_cast<double>(types));
    }
    REQUIRE(freqs.size() >= 5);
    CHECK(spearman(freqs, counts) < 0.0);
  }
}

TEST_CASE("make_batches") {
  SUBCASE("one stream without truncation gives one segment per document") {
    std::vector<Document> docs{make_doc({"a", "b"}), make_doc({"c"})};
    BatchPlan plan = make_batches(docs, 1, 0);
    REQUIRE(plan.streams.size() == 1);
    REQUIRE(plan.streams[0].size() == 2);
    CHECK(plan.streams[0][0].len == 2);
    CHECK_FALSE(plan.streams[0][0].carry_in);
    CHECK_FALSE(plan.streams[0][1].carry_in);
  }
  SUBCASE("a 70-word document at T = 35 becomes two carried segments") {
    std::vector<Document> docs{make_doc(std::vector<std::string>(70, "w"))};
    BatchPlan plan = make_batches(docs, 1, 35);
    REQUIRE(plan.streams[0].size() == 2);
    CHECK(plan.streams[0][0].len == 35);
    CHECK_FALSE(plan.streams[0][0].carry_in);
    CHECK(plan.streams[0][1].len == 35);
    CHECK(plan.streams[0][1].carry_in);
  }
  SUBCASE("token conservation over random corpora") {
    Rng rng(55);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<Document> docs;
      std::size_t total = 0;
      const int ndocs = 1 + static_cast<int>(rng.below(6));
      for (int d = 0; d < ndocs; ++d) {
        const std::size_t n = 1 + rng.below(90);
        docs.push_back(make_doc(std::vector<std::string>(n, "w")));
        total += n;
      }
      const int batch = 1 + static_cast<int>(rng.below(4));
      const std::size_t trunc = rng.below(3) == 0 ? 0 : 1 + rng.below(40);
      BatchPlan plan = make_batches(docs, batch, trunc);
      CHECK(plan.total_tokens() == total);
      for (const auto& stream : plan.streams)
        for (const Segment& seg : stream)
          if (trunc > 0) CHECK(seg.len <= trunc);
    }
  }
  SUBCASE("truncation boundaries never split a word") {
    // Segments index whole tokens by construction; verify offsets are
    // contiguous and cover each document exactly once.
    std::vector<Document> docs{make_doc(std::vector<std::string>(53, "w")),
                               make_doc(std::vector<std::string>(12, "v"))};
    BatchPlan plan = make_batches(docs, 2, 10);
    std::map<int, std::size_t> covered;
    for (const auto& stream : plan.streams) {
      for (const Segment& seg : stream) {
        CHECK(seg.begin == covered[seg.doc]);
        covered[seg.doc] += seg.len;
      }
    }
    CHECK(covered[0] == 53);
    CHECK(covered[1] == 12);
  }
}

TEST_CASE("utf8 round trip through vocabulary") {
  std::vector<Document> docs{make_doc({"caf\xC3\xA9", "na\xC3\xAFve", "caf\xC3\xA9"})};
  Vocabulary v = build_char_vocab(docs, 1);
  CHECK(v.has_char(U'é'));
  auto ids = v.encode("caf\xC3\xA9");
  CHECK(ids.size() == 4);
  CHECK(v.decode(ids) == "caf\xC3\xA9");
}
