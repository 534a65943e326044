#include "hclm/lstm.hpp"

namespace hclm {

LstmParams LstmParams::create(int d_in, int d, const Initializer& init, Rng* rng,
                              const std::string& prefix) {
  LstmParams p;
  p.w_input = make_parameter({4 * d, d_in}, init, rng, prefix + ".w_input");
  p.w_hidden = make_parameter({4 * d, d}, init, rng, prefix + ".w_hidden");
  p.bias = make_parameter({4 * d}, init, rng, prefix + ".bias");
  return p;
}

void LstmParams::collect(std::vector<NamedTensor>& out, const std::string& prefix) const {
  out.push_back({prefix + ".w_input", w_input});
  out.push_back({prefix + ".w_hidden", w_hidden});
  out.push_back({prefix + ".bias", bias});
}

LstmState lstm_step(const Tensor& x, const LstmState& state, const LstmParams& params) {
  const int d = params.hidden_dim();
  if (x.rank() != 1 || x.dim(0) != params.input_dim())
    throw InvalidShapeError("lstm_step: input dimension mismatch");
  if (state.h.dim(0) != d || state.c.dim(0) != d)
    throw InvalidShapeError("lstm_step: state dimension mismatch");

  Tensor z = add(add(matmul(params.w_input, x), matmul(params.w_hidden, state.h)), params.bias);
  Tensor gi = logistic(slice(z, 0, d));
  Tensor gf = logistic(slice(z, d, d));
  Tensor gc = tanh(slice(z, 2 * d, d));
  Tensor go = logistic(slice(z, 3 * d, d));

  Tensor c = add(mul(gf, state.c), mul(gi, gc));
  Tensor h = mul(go, tanh(c));
  return {h, c};
}

std::vector<LstmState> run_sequence(std::span<const Tensor> xs, const LstmState& init,
                                    const LstmParams& params) {
  if (xs.empty()) throw ContractViolation("run_sequence: empty input sequence");
  std::vector<LstmState> states;
  states.reserve(xs.size());
  const LstmState* prev = &init;
  for (const Tensor& x : xs) {
    states.push_back(lstm_step(x, *prev, params));
    prev = &states.back();
  }
  return states;
}

}  // namespace hclm
