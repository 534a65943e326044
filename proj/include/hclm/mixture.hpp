#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hclm/tensor.hpp"

namespace hclm {

// Adaptive gate: gamma = affine(tanh(affine(tanh(affine(h))))), a two-layer
// tanh MLP with a final d->1 projection; lambda = logistic(gamma).
struct GateParams {
  Tensor w1, b1;  // {d,d}, {d}
  Tensor w2, b2;  // {d,d}, {d}
  Tensor w3, b3;  // {1,d}, {1}

  static GateParams create(int d, const Initializer& init, Rng* rng);
  void collect(std::vector<NamedTensor>& out) const;
};

Tensor gate_gamma(const Tensor& h, const GateParams& params);   // -> {1}
Tensor gate_lambda(const Tensor& h, const GateParams& params);  // logistic(gamma), in (0,1)

// log(lambda * exp(log_p_lm) + (1 - lambda) * exp(log_p_ptr)), computed via
// log-sum-exp with log lambda = log_sigmoid(gamma). Pass nullopt for
// log_p_ptr when the word is absent from a nonempty cache (p_ptr = 0).
Tensor mix_logprob(const Tensor& log_p_lm, const std::optional<Tensor>& log_p_ptr,
                   const Tensor& gamma);

// Plain-arithmetic mixture on recorded values; log_p_ptr may be -inf.
// Throws ImpossibleEventError when both components carry no mass.
double mix_logprob(double log_p_lm, double log_p_ptr, double lambda);

// p(z|w) = (1 - lambda) * p_ptr(w) / p_mix(w), clamped into [0,1].
// Throws ImpossibleEventError when p_mix_w == 0.
double posterior_copy(double lambda, double p_ptr_w, double p_mix_w);

// Per-token record of the two routes and their mixture.
struct StepOutput {
  std::string word;
  double log_p_lm = 0.0;
  double log_p_ptr = -std::numeric_limits<double>::infinity();
  double lambda = 1.0;  // recorded as 1 when the cache is empty (gate bypassed)
  double log_p_mix = 0.0;
  double copied_posterior = 0.0;
};

}  // namespace hclm
