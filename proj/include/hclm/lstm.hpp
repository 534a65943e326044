#pragma once

#include <span>
#include <string>
#include <vector>

#include "hclm/tensor.hpp"

namespace hclm {

// Single-layer LSTM used by the character encoder, word-level context and
// character decoder, and by the flat character baseline. The fused gate
// blocks are ordered input, forget, candidate, output.
struct LstmParams {
  Tensor w_input;   // {4d, d_in}
  Tensor w_hidden;  // {4d, d}
  Tensor bias;      // {4d}

  int input_dim() const { return w_input.dim(1); }
  int hidden_dim() const { return w_hidden.dim(1); }

  static LstmParams create(int d_in, int d, const Initializer& init, Rng* rng,
                           const std::string& prefix);
  void collect(std::vector<NamedTensor>& out, const std::string& prefix) const;
};

struct LstmState {
  Tensor h;
  Tensor c;

  static LstmState zeros(int d) { return {make_zeros({d}), make_zeros({d})}; }
  LstmState detached() const { return {h.detach(), c.detach()}; }
};

// c' = f.c + i.g, h' = o.tanh(c') with logistic gates and tanh candidate.
LstmState lstm_step(const Tensor& x, const LstmState& state, const LstmParams& params);

// states[j] = lstm_step(xs[j], states[j-1]); throws ContractViolation on empty input.
std::vector<LstmState> run_sequence(std::span<const Tensor> xs, const LstmState& init,
                                    const LstmParams& params);

}  // namespace hclm
