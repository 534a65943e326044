#include <doctest.h>

#include <cmath>

#include "hclm/evaluator.hpp"
#include "test_util.hpp"

using namespace hclm;
using namespace hclm::testutil;

TEST_CASE("bpc closed forms") {
  SUBCASE("report formula: 2 bits over 2 characters is 1.0 bpc") {
    EvalReport r = make_report(2.0 * std::log(2.0), 2, 1);
    CHECK(r.bpc == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.word_perplexity == doctest::Approx(4.0).epsilon(1e-12));
  }
  SUBCASE("zero-parameter model: uniform over the 4-symbol inventory") {
    // Smallest real vocabulary is {a} + BOW/EOW/RARE = 4 softmax classes, so
    // corpus "a" scores (1/4)^2 over |c| = 2 -> bpc = 2.
    Vocabulary v = ascii_vocab("a");
    Model m = Model::create(ModelKind::Hclm, v, 4, 0, Initializer::zeros(), nullptr);
    std::vector<Document> docs{make_doc({"a"})};
    EvalResult res = evaluate(m, docs);
    CHECK(res.report.characters == 2);
    CHECK(res.report.tokens == 1);
    CHECK(res.report.nll_nats == doctest::Approx(2.0 * std::log(4.0)).epsilon(1e-12));
    CHECK(res.report.bpc == doctest::Approx(2.0).epsilon(1e-12));
  }
}

TEST_CASE("per-char NLL summed over decoder steps equals per-word NLL") {
  // The word NLL is assembled from per-character log softmax terms, so the
  // two accountings agree exactly; check the character count identity too.
  Vocabulary v = ascii_vocab("abc");
  Model m = random_model(ModelKind::Hclm, v, 5, 0, 3);
  std::vector<Document> docs{make_doc({"ab", "c", "abc"})};
  EvalOptions opts;
  opts.record_steps = true;
  EvalResult res = evaluate(m, docs, opts);
  double word_sum = 0.0;
  for (const auto& rec : res.steps) word_sum += -rec.out.log_p_mix;
  CHECK(word_sum == doctest::Approx(res.report.nll_nats).epsilon(1e-12));
  CHECK(res.report.characters == 2 + 1 + 1 + 1 + 3 + 1);
}

TEST_CASE("bpc and perplexity stay consistent on random corpora") {
  Vocabulary v = ascii_vocab("abcd");
  Model m = random_model(ModelKind::HclmCache, v, 6, 4, 9);
  Rng rng(12);
  std::vector<std::string> pool{"a", "bc", "dab", "cc"};
  std::vector<Document> docs;
  for (int d = 0; d < 3; ++d) {
    std::vector<std::string> tokens;
    for (int t = 0; t < 20; ++t) tokens.push_back(pool[rng.below(pool.size())]);
    docs.push_back(make_doc(tokens));
  }
  EvalReport r = evaluate(m, docs).report;
  // perplexity = 2^(bpc * |c| / tokens), from the same report
  const double expected =
      std::pow(2.0, r.bpc * static_cast<double>(r.characters) / static_cast<double>(r.tokens));
  CHECK(r.word_perplexity == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("multithreaded evaluation reproduces single-threaded totals") {
  Vocabulary v = ascii_vocab("abcd");
  Model m = random_model(ModelKind::HclmCache, v, 6, 4, 21);
  Rng rng(5);
  std::vector<Document> docs;
  for (int d = 0; d < 6; ++d) {
    std::vector<std::string> tokens;
    for (int t = 0; t < 15; ++t)
      tokens.push_back(std::string(1 + rng.below(3), static_cast<char>('a' + rng.below(4))));
    docs.push_back(make_doc(tokens));
  }
  EvalOptions st;
  EvalOptions mt;
  mt.threads = 4;
  CHECK(evaluate(m, docs, st).report.nll_nats == evaluate(m, docs, mt).report.nll_nats);
}

TEST_CASE("posterior accounting identity holds on recorded steps") {
  Vocabulary v = ascii_vocab("abcd");
  Model m = random_model(ModelKind::HclmCache, v, 6, 3, 33);
  std::vector<Document> docs{make_doc({"ab", "cd", "ab", "cd", "ab", "da"})};
  EvalOptions opts;
  opts.record_steps = true;
  EvalResult res = evaluate(m, docs, opts);
  for (const auto& rec : res.steps) {
    const double p_ptr =
        std::isfinite(rec.out.log_p_ptr) ? std::exp(rec.out.log_p_ptr) : 0.0;
    const double direct =
        rec.out.lambda * std::exp(rec.out.log_p_lm) + (1.0 - rec.out.lambda) * p_ptr;
    CHECK(std::abs(std::exp(rec.out.log_p_mix) - direct) < 1e-10);
    CHECK(rec.out.copied_posterior >= 0.0);
    CHECK(rec.out.copied_posterior <= 1.0);
  }
}

TEST_CASE("type_posteriors") {
  // Build synthetic step records directly; doc 0 sees x twice, y once;
  // doc 1 sees x once (its doc-1 first occurrence) and z twice.
  auto rec = [](const std::string& w, int doc, std::size_t pos, double posterior) {
    StepRecord r;
    r.out.word = w;
    r.out.copied_posterior = posterior;
    r.doc = doc;
    r.pos = pos;
    return r;
  };
  std::vector<StepRecord> steps{
      rec("x", 0, 0, 0.0), rec("y", 0, 1, 0.0), rec("x", 0, 2, 0.8),
      rec("x", 1, 0, 0.0), rec("z", 1, 1, 0.0), rec("z", 1, 2, 0.4),
  };
  std::unordered_map<std::string, std::size_t> train_counts{{"x", 7}, {"y", 1}};
  auto posteriors = type_posteriors(steps, train_counts);

  REQUIRE(posteriors.size() == 2);  // y occurs once -> excluded; x and z kept
  CHECK(posteriors[0].word == "x");
  CHECK(posteriors[0].count == 1);  // only the doc-0 second occurrence counts
  CHECK(posteriors[0].mean_posterior == doctest::Approx(0.8));
  CHECK(posteriors[0].train_count == 7);
  CHECK(posteriors[1].word == "z");
  CHECK(posteriors[1].mean_posterior == doctest::Approx(0.4));
  CHECK(posteriors[1].train_count == 0);

  SUBCASE("rare-word tables filter by train count and stay monotone") {
    RareWordTables tables = rare_word_table(posteriors, 5, 10);
    REQUIRE(tables.top.size() == 1);  // only z has train_count < 5
    CHECK(tables.top[0].word == "z");
    RareWordTables all = rare_word_table(posteriors, 100, 10);
    REQUIRE(all.top.size() == 2);
    CHECK(all.top[0].mean_posterior >= all.top[1].mean_posterior);
    CHECK(all.bottom[0].mean_posterior <= all.bottom[1].mean_posterior);
  }
  SUBCASE("empty filter result gives two empty lists") {
    RareWordTables tables = rare_word_table(posteriors, 0, 10);
    CHECK(tables.top.empty());
    CHECK(tables.bottom.empty());
  }
  SUBCASE("scatter restricts to types absent from training") {
    std::unordered_map<std::string, std::size_t> test_counts{{"x", 3}, {"z", 2}};
    std::unordered_set<std::string> train_types{"x", "y"};
    auto pairs = posterior_frequency_scatter(posteriors, test_counts, train_types);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].first == 2);
    CHECK(pairs[0].second == doctest::Approx(0.4));
  }
}

TEST_CASE("scatter pair count equals OOV types with two or more occurrences") {
  // Within-document repeats so each OOV type with >= 2 occurrences has a
  // posterior sample.
  Vocabulary v = ascii_vocab("abcdxyz");
  Model m = random_model(ModelKind::HclmCache, v, 6, 6, 41);
  std::vector<Document> docs{make_doc({"xx", "ab", "xx", "yz", "yz", "cd"})};
  EvalOptions opts;
  opts.record_steps = true;
  EvalResult res = evaluate(m, docs, opts);
  std::unordered_map<std::string, std::size_t> train_counts{{"ab", 9}, {"cd", 2}};
  std::unordered_set<std::string> train_types{"ab", "cd"};
  auto posteriors = type_posteriors(res.steps, train_counts);
  auto counts = word_counts(docs);
  auto pairs = posterior_frequency_scatter(posteriors, counts, train_types);
  // OOV types with >= 2 occurrences: xx, yz.
  CHECK(pairs.size() == 2);

  SUBCASE("no OOV types gives an empty scatter") {
    std::unordered_set<std::string> all_types = word_types(docs);
    CHECK(posterior_frequency_scatter(posteriors, counts, all_types).empty());
  }
}

TEST_CASE("spearman correlation") {
  std::vector<double> a{1, 2, 3, 4, 5};
  std::vector<double> up{2, 4, 5, 7, 9};
  std::vector<double> down{9, 7, 5, 4, 2};
  CHECK(spearman(a, up) == doctest::Approx(1.0));
  CHECK(spearman(a, down) == doctest::Approx(-1.0));
  std::vector<double> tied{1, 1, 2, 2, 3};
  CHECK(spearman(tied, tied) == doctest::Approx(1.0));
  CHECK_THROWS_AS(spearman(std::vector<double>{1.0}, std::vector<double>{2.0}),
                  ContractViolation);
}

TEST_CASE("baseline model evaluates comparably") {
  Vocabulary v = ascii_vocab("ab");
  Model m = Model::create(ModelKind::LstmBaseline, v, 4, 0, Initializer::zeros(), nullptr);
  std::vector<Document> docs{make_doc({"a", "b"})};
  EvalReport r = evaluate(m, docs).report;
  // Uniform over 5 symbols, 4 emissions (a, EOW, b, EOW), |c| = 4.
  CHECK(r.characters == 4);
  CHECK(r.nll_nats == doctest::Approx(4.0 * std::log(5.0)).epsilon(1e-12));
}
