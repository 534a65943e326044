#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "hclm/cache.hpp"

using namespace hclm;

namespace {

Tensor key(std::vector<double> v) {
  const int n = static_cast<int>(v.size());
  return make_constant({n}, std::move(v));
}

// Textbook reference cache used as the LRU oracle: plain vectors, linear
// scans, independent of the production data structure.
struct ReferenceCache {
  struct Slot {
    std::vector<double> key;
    std::string word;
    std::uint64_t last_used;
  };
  std::size_t capacity;
  std::uint64_t clock = 0;
  std::vector<Slot> slots;

  std::optional<std::string> insert(const std::string& word, const std::vector<double>& h) {
    ++clock;
    for (Slot& s : slots) {
      if (s.word == word) {
        for (std::size_t i = 0; i < s.key.size(); ++i) s.key[i] = (s.key[i] + h[i]) * 0.5;
        s.last_used = clock;
        return std::nullopt;
      }
    }
    if (slots.size() < capacity) {
      slots.push_back({h, word, clock});
      return std::nullopt;
    }
    std::size_t victim = 0;
    for (std::size_t i = 1; i < slots.size(); ++i)
      if (slots[i].last_used < slots[victim].last_used) victim = i;
    std::string evicted = slots[victim].word;
    slots[victim] = {h, word, clock};
    return evicted;
  }
};

}  // namespace

TEST_CASE("insert semantics") {
  SUBCASE("LRU eviction of the oldest entry") {
    Cache cache(2);
    cache.insert("a", key({1, 0}));
    cache.insert("b", key({0, 1}));
    auto evicted = cache.insert("c", key({1, 1}));
    REQUIRE(evicted.has_value());
    CHECK(*evicted == "a");
    CHECK(cache.size() == 2);
    CHECK(cache.find("b").has_value());
    CHECK(cache.find("c").has_value());
    CHECK_FALSE(cache.find("a").has_value());
  }
  SUBCASE("averaging equal keys is a fixed point") {
    Cache cache(4);
    cache.insert("w", key({0.25, -1.5}));
    cache.insert("w", key({0.25, -1.5}));
    const auto& k = cache.slots()[0].key;
    CHECK(k[0] == 0.25);
    CHECK(k[1] == -1.5);
  }
  SUBCASE("averaging distinct keys") {
    Cache cache(4);
    cache.insert("w", key({2, 0}));
    cache.insert("w", key({0, 2}));
    const auto& k = cache.slots()[0].key;
    CHECK(k[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(k[1] == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("re-inserting refreshes recency") {
    Cache cache(2);
    cache.insert("a", key({1}));
    cache.insert("b", key({2}));
    cache.insert("a", key({3}));  // touch a; b is now the LRU entry
    auto evicted = cache.insert("c", key({4}));
    REQUIRE(evicted.has_value());
    CHECK(*evicted == "b");
  }
  SUBCASE("empty word is rejected") {
    Cache cache(2);
    CHECK_THROWS_AS(cache.insert("", key({1})), ContractViolation);
  }
}

TEST_CASE("reset") {
  Cache cache(3);
  cache.insert("a", key({1}));
  cache.insert("b", key({2}));
  const auto clock_before = cache.clock();
  cache.reset();
  CHECK(cache.size() == 0);
  CHECK(cache.clock() == clock_before);  // clock preserved
  cache.reset();                         // idempotent
  CHECK(cache.size() == 0);
  Tensor probs = make_constant({1}, {1.0});
  // After reset nothing can match.
  CHECK_FALSE(cache.find("a").has_value());
}

TEST_CASE("query vector") {
  const int d = 3;
  SUBCASE("zero projections give the zero query") {
    CacheParams p = CacheParams::create(d, Initializer::zeros(), nullptr);
    Tensor r = query_vector(key({1, -2, 3}), p);
    for (double v : r.values()) CHECK(v == 0.0);
  }
  SUBCASE("coordinates are bounded by 1 in magnitude for any h") {
    Rng rng(3);
    CacheParams p = CacheParams::create(d, Initializer::uniform(-2, 2), &rng);
    // tanh saturates to exactly +-1.0 in doubles for large arguments.
    Tensor r = query_vector(key({100, -50, 7}), p);
    for (double v : r.values()) CHECK(std::abs(v) <= 1.0);
    Tensor moderate = query_vector(key({0.4, -0.2, 0.9}), p);
    for (double v : moderate.values()) CHECK(std::abs(v) < 1.0);
  }
  SUBCASE("matches a scalar reference computation") {
    Rng rng(9);
    CacheParams p = CacheParams::create(d, Initializer::uniform(-0.7, 0.7), &rng);
    std::vector<double> h{0.3, -0.9, 1.4};
    Tensor r = query_vector(key(h), p);
    for (int i = 0; i < d; ++i) {
      double acc = p.b_q[static_cast<std::size_t>(i)];
      for (int j = 0; j < d; ++j)
        acc += p.w_q[static_cast<std::size_t>(i * d + j)] * h[static_cast<std::size_t>(j)];
      CHECK(r[static_cast<std::size_t>(i)] == doctest::Approx(std::tanh(acc)).epsilon(1e-12));
    }
  }
  SUBCASE("dimension mismatch") {
    CacheParams p = CacheParams::create(d, Initializer::zeros(), nullptr);
    CHECK_THROWS_AS(query_vector(key({1, 2}), p), InvalidShapeError);
  }
}

TEST_CASE("copy scores") {
  const int d = 2;
  SUBCASE("zero score vector v zeroes every score") {
    Rng rng(1);
    CacheParams p = CacheParams::create(d, Initializer::uniform(-1, 1), &rng);
    p.v.mutable_values() = {0.0, 0.0};
    Cache cache(4);
    cache.insert("a", key({1, 2}));
    cache.insert("b", key({-1, 0.5}));
    Tensor u = copy_scores(query_vector(key({0.2, 0.4}), p), cache, p);
    for (double v : u.values()) CHECK(v == 0.0);
  }
  SUBCASE("identical keys give identical scores") {
    Rng rng(2);
    CacheParams p = CacheParams::create(d, Initializer::uniform(-1, 1), &rng);
    Cache cache(4);
    cache.insert("a", key({0.7, -0.1}));
    cache.insert("b", key({0.7, -0.1}));
    Tensor u = copy_scores(query_vector(key({1, 1}), p), cache, p);
    CHECK(u[0] == u[1]);
  }
  SUBCASE("matches a scalar reference within 1e-12") {
    Rng rng(4);
    CacheParams p = CacheParams::create(d, Initializer::uniform(-0.8, 0.8), &rng);
    Cache cache(4);
    std::vector<double> k1{0.3, 1.1}, k2{-0.6, 0.2}, h{0.9, -0.4};
    cache.insert("a", key(k1));
    cache.insert("b", key(k2));
    Tensor r = query_vector(key(h), p);
    Tensor u = copy_scores(r, cache, p);
    auto score_of = [&](const std::vector<double>& kk) {
      double s = 0.0;
      for (int i = 0; i < d; ++i) {
        double acc = r[static_cast<std::size_t>(i)];
        for (int j = 0; j < d; ++j)
          acc += p.w_u[static_cast<std::size_t>(i * d + j)] * kk[static_cast<std::size_t>(j)];
        s += p.v[static_cast<std::size_t>(i)] * std::tanh(acc);
      }
      return s;
    };
    CHECK(u[0] == doctest::Approx(score_of(k1)).epsilon(1e-12));
    CHECK(u[1] == doctest::Approx(score_of(k2)).epsilon(1e-12));
  }
  SUBCASE("empty cache") {
    CacheParams p = CacheParams::create(d, Initializer::zeros(), nullptr);
    Cache cache(4);
    CHECK_THROWS_AS(copy_scores(key({0, 0}), cache, p), EmptyCacheError);
  }
}

TEST_CASE("slot distribution and pointer probability") {
  SUBCASE("equal scores spread mass uniformly") {
    Tensor probs = p_mem(make_constant({4}, {0.3, 0.3, 0.3, 0.3}));
    for (double v : probs.values()) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
  }
  SUBCASE("shift invariance") {
    Tensor a = p_mem(make_constant({3}, {0.1, -0.4, 2.0}));
    Tensor b = p_mem(make_constant({3}, {100.1, 99.6, 102.0}));
    for (std::size_t i = 0; i < 3; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
  }
  SUBCASE("closed form for [0, log 3]") {
    Tensor probs = p_mem(make_constant({2}, {0.0, std::log(3.0)}));
    CHECK(probs[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(probs[1] == doctest::Approx(0.75).epsilon(1e-12));
  }
  SUBCASE("p_ptr on present, absent and single-slot words") {
    Cache cache(3);
    cache.insert("a", key({1}));
    Tensor single = p_mem(make_constant({1}, {0.7}));
    CHECK(p_ptr(cache, single, "a") == doctest::Approx(1.0));
    CHECK(p_ptr(cache, single, "zzz") == 0.0);

    cache.insert("b", key({2}));
    cache.insert("c", key({3}));
    Rng rng(8);
    Tensor probs = p_mem(make_constant({3}, {rng.uniform(), rng.uniform(), rng.uniform()}));
    double total = 0.0;
    for (const char* w : {"a", "b", "c"}) total += p_ptr(cache, probs, w);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("random insert sequences match the reference cache exactly") {
  Rng rng(1234);
  const std::vector<std::string> pool{"a", "b", "c", "d", "e", "f", "g", "h"};
  for (std::size_t capacity : {1u, 2u, 3u, 8u}) {
    for (int trial = 0; trial < 200; ++trial) {
      Cache cache(capacity);
      ReferenceCache ref{capacity};
      const int ops = 1 + static_cast<int>(rng.below(30));
      for (int op = 0; op < ops; ++op) {
        const std::string& w = pool[rng.below(pool.size())];
        std::vector<double> h{rng.uniform(-1, 1), rng.uniform(-1, 1)};
        auto got = cache.insert(w, key(h));
        auto expect = ref.insert(w, h);
        REQUIRE(got == expect);
        REQUIRE(cache.size() == ref.slots.size());
        REQUIRE(cache.size() <= capacity);
        for (std::size_t i = 0; i < ref.slots.size(); ++i) {
          REQUIRE(cache.slots()[i].word == ref.slots[i].word);
          REQUIRE(cache.slots()[i].last_used == ref.slots[i].last_used);
          REQUIRE(cache.slots()[i].key.values() == ref.slots[i].key);  // bit-exact
        }
      }
    }
  }
}

TEST_CASE("detach_keys preserves values and drops graph links") {
  Tensor h = make_parameter({2}, Initializer::zeros());
  h.mutable_values() = {0.5, -0.5};
  Cache cache(2);
  {
    Tape tape;
    cache.insert("w", add(h, h));
    CHECK(cache.slots()[0].key.requires_grad());
  }
  cache.detach_keys();
  CHECK_FALSE(cache.slots()[0].key.requires_grad());
  CHECK(cache.slots()[0].key[0] == doctest::Approx(1.0));
}
