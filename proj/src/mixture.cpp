#include "hclm/mixture.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace hclm {

GateParams GateParams::create(int d, const Initializer& init, Rng* rng) {
  GateParams p;
  p.w1 = make_parameter({d, d}, init, rng, "gate.w1");
  p.b1 = make_parameter({d}, init, rng, "gate.b1");
  p.w2 = make_parameter({d, d}, init, rng, "gate.w2");
  p.b2 = make_parameter({d}, init, rng, "gate.b2");
  p.w3 = make_parameter({1, d}, init, rng, "gate.w3");
  p.b3 = make_parameter({1}, init, rng, "gate.b3");
  return p;
}

void GateParams::collect(std::vector<NamedTensor>& out) const {
  out.push_back({"gate.w1", w1});
  out.push_back({"gate.b1", b1});
  out.push_back({"gate.w2", w2});
  out.push_back({"gate.b2", b2});
  out.push_back({"gate.w3", w3});
  out.push_back({"gate.b3", b3});
}

Tensor gate_gamma(const Tensor& h, const GateParams& params) {
  if (h.rank() != 1 || h.dim(0) != params.w1.dim(1))
    throw InvalidShapeError("gate_gamma: dimension mismatch");
  Tensor a = tanh(add(matmul(params.w1, h), params.b1));
  Tensor b = tanh(add(matmul(params.w2, a), params.b2));
  return add(matmul(params.w3, b), params.b3);
}

Tensor gate_lambda(const Tensor& h, const GateParams& params) {
  return logistic(gate_gamma(h, params));
}

Tensor mix_logprob(const Tensor& log_p_lm, const std::optional<Tensor>& log_p_ptr,
                   const Tensor& gamma) {
  Tensor lm_branch = add(log_sigmoid(gamma), log_p_lm);
  if (!log_p_ptr) return lm_branch;  // p_ptr = 0: only the LM branch carries mass
  Tensor ptr_branch = add(log_sigmoid(neg(gamma)), *log_p_ptr);
  std::array<Tensor, 2> branches{lm_branch, ptr_branch};
  return logsumexp(concat(branches));
}

double mix_logprob(double log_p_lm, double log_p_ptr, double lambda) {
  const double inf = std::numeric_limits<double>::infinity();
  const double lm_branch = lambda > 0.0 ? std::log(lambda) + log_p_lm : -inf;
  const double ptr_branch = lambda < 1.0 ? std::log1p(-lambda) + log_p_ptr : -inf;
  const double m = std::max(lm_branch, ptr_branch);
  if (m == -inf) throw ImpossibleEventError("mix_logprob: both mixture components are zero");
  return m + std::log(std::exp(lm_branch - m) + std::exp(ptr_branch - m));
}

double posterior_copy(double lambda, double p_ptr_w, double p_mix_w) {
  if (p_mix_w <= 0.0) throw ImpossibleEventError("posterior_copy: word has zero probability");
  if (p_ptr_w == 0.0) return 0.0;
  const double post = (1.0 - lambda) * p_ptr_w / p_mix_w;
  return std::clamp(post, 0.0, 1.0);
}

}  // namespace hclm
