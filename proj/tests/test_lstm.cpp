#include <doctest.h>

#include <cmath>
#include <vector>

#include "hclm/lstm.hpp"

using namespace hclm;

namespace {

// Independent scalar-by-scalar LSTM evaluation used as the oracle.
struct ScalarLstm {
  int d_in, d;
  std::vector<double> wi, wh, b;  // row-major {4d, d_in}, {4d, d}, {4d}

  static double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

  void step(const std::vector<double>& x, std::vector<double>& h, std::vector<double>& c) const {
    std::vector<double> z(static_cast<std::size_t>(4 * d), 0.0);
    for (int r = 0; r < 4 * d; ++r) {
      double acc = b[static_cast<std::size_t>(r)];
      for (int j = 0; j < d_in; ++j)
        acc += wi[static_cast<std::size_t>(r * d_in + j)] * x[static_cast<std::size_t>(j)];
      for (int j = 0; j < d; ++j)
        acc += wh[static_cast<std::size_t>(r * d + j)] * h[static_cast<std::size_t>(j)];
      z[static_cast<std::size_t>(r)] = acc;
    }
    std::vector<double> h2(static_cast<std::size_t>(d)), c2(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) {
      const double gi = sigmoid(z[static_cast<std::size_t>(k)]);
      const double gf = sigmoid(z[static_cast<std::size_t>(d + k)]);
      const double gc = std::tanh(z[static_cast<std::size_t>(2 * d + k)]);
      const double go = sigmoid(z[static_cast<std::size_t>(3 * d + k)]);
      c2[static_cast<std::size_t>(k)] = gf * c[static_cast<std::size_t>(k)] + gi * gc;
      h2[static_cast<std::size_t>(k)] = go * std::tanh(c2[static_cast<std::size_t>(k)]);
    }
    h = h2;
    c = c2;
  }
};

LstmParams random_params(int d_in, int d, std::uint64_t seed) {
  Rng rng(seed);
  return LstmParams::create(d_in, d, Initializer::uniform(-0.6, 0.6), &rng, "lstm");
}

Tensor vec(std::vector<double> v) {
  const int n = static_cast<int>(v.size());
  return make_constant({n}, std::move(v));
}

}  // namespace

TEST_CASE("all-zero parameters keep a zero state at zero") {
  LstmParams p = LstmParams::create(3, 4, Initializer::zeros(), nullptr, "z");
  LstmState s = LstmState::zeros(4);
  LstmState next = lstm_step(vec({1.0, -2.0, 0.5}), s, p);
  for (double v : next.h.values()) CHECK(v == 0.0);
  for (double v : next.c.values()) CHECK(v == 0.0);
}

TEST_CASE("zero weights halve the carried memory cell") {
  LstmParams p = LstmParams::create(2, 3, Initializer::zeros(), nullptr, "z");
  LstmState s{make_zeros({3}), vec({1.0, -4.0, 2.0})};
  LstmState next = lstm_step(vec({0.3, 0.7}), s, p);
  CHECK(next.c[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(next.c[1] == doctest::Approx(-2.0).epsilon(1e-15));
  CHECK(next.c[2] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("random step matches the scalar oracle within 1e-12") {
  const int d_in = 3, d = 4;
  LstmParams p = random_params(d_in, d, 11);
  ScalarLstm ref{d_in, d, p.w_input.values(), p.w_hidden.values(), p.bias.values()};

  std::vector<double> x{0.4, -1.1, 0.9};
  std::vector<double> h{0.2, -0.3, 0.5, 0.1}, c{-0.6, 0.4, 0.0, 1.2};
  LstmState state{vec(h), vec(c)};
  LstmState next = lstm_step(vec(x), state, p);
  ref.step(x, h, c);
  for (int i = 0; i < d; ++i) {
    CHECK(next.h[static_cast<std::size_t>(i)] ==
          doctest::Approx(h[static_cast<std::size_t>(i)]).epsilon(1e-12));
    CHECK(next.c[static_cast<std::size_t>(i)] ==
          doctest::Approx(c[static_cast<std::size_t>(i)]).epsilon(1e-12));
  }
}

TEST_CASE("run_sequence") {
  LstmParams p = random_params(2, 3, 21);
  std::vector<Tensor> xs{vec({1.0, 0.0}), vec({0.0, 1.0})};

  SUBCASE("singleton sequence equals one step") {
    auto states = run_sequence(std::span<const Tensor>(xs.data(), 1), LstmState::zeros(3), p);
    LstmState direct = lstm_step(xs[0], LstmState::zeros(3), p);
    CHECK(states.back().h.values() == direct.h.values());
    CHECK(states.back().c.values() == direct.c.values());
  }
  SUBCASE("composition is bit-exact") {
    auto full = run_sequence(xs, LstmState::zeros(3), p);
    auto first = run_sequence(std::span<const Tensor>(xs.data(), 1), LstmState::zeros(3), p);
    LstmState resumed = lstm_step(xs[1], first.back(), p);
    CHECK(full.back().h.values() == resumed.h.values());
    CHECK(full.back().c.values() == resumed.c.values());
  }
  SUBCASE("empty sequence is rejected") {
    CHECK_THROWS_AS(run_sequence(std::span<const Tensor>(), LstmState::zeros(3), p),
                    ContractViolation);
  }
  SUBCASE("reversal changes the final state") {
    std::vector<Tensor> fwd{vec({1.0, 2.0}), vec({-1.0, 0.5}), vec({0.3, 0.3})};
    std::vector<Tensor> rev{fwd[2], fwd[1], fwd[0]};
    auto a = run_sequence(fwd, LstmState::zeros(3), p);
    auto b = run_sequence(rev, LstmState::zeros(3), p);
    CHECK(a.back().h.values() != b.back().h.values());
  }
}

TEST_CASE("compositionality across a split point is bit-exact") {
  LstmParams p = random_params(2, 4, 31);
  Rng rng(77);
  std::vector<Tensor> xs;
  for (int i = 0; i < 7; ++i) xs.push_back(vec({rng.uniform(-1, 1), rng.uniform(-1, 1)}));
  auto whole = run_sequence(xs, LstmState::zeros(4), p);
  auto head = run_sequence(std::span<const Tensor>(xs.data(), 3), LstmState::zeros(4), p);
  auto tail = run_sequence(std::span<const Tensor>(xs.data() + 3, 4), head.back(), p);
  CHECK(whole.back().h.values() == tail.back().h.values());
  CHECK(whole.back().c.values() == tail.back().c.values());
}

TEST_CASE("gradients through five unrolled steps pass finite differences") {
  const int d = 3;
  LstmParams p = random_params(2, d, 41);
  std::vector<Tensor> xs;
  Rng rng(5);
  for (int i = 0; i < 5; ++i) xs.push_back(vec({rng.uniform(-1, 1), rng.uniform(-1, 1)}));

  auto loss_fn = [&] {
    auto states = run_sequence(xs, LstmState::zeros(d), p);
    return sum(mul(states.back().h, states.back().h));
  };
  std::vector<NamedTensor> params;
  p.collect(params, "lstm");
  auto result = finite_diff_check(loss_fn, params, 1e-5);
  CHECK(result.max_rel_error < 1e-4);
}

TEST_CASE("dimension mismatches are invalid-shape errors") {
  LstmParams p = random_params(3, 4, 51);
  CHECK_THROWS_AS(lstm_step(vec({1.0, 2.0}), LstmState::zeros(4), p), InvalidShapeError);
  CHECK_THROWS_AS(lstm_step(vec({1.0, 2.0, 3.0}), LstmState::zeros(2), p), InvalidShapeError);
}
