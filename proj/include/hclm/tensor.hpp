#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hclm/errors.hpp"
#include "hclm/rng.hpp"

namespace hclm {

// Reverse-mode automatic differentiation over dense double tensors.
//
// Every operation creates a Node holding the forward value; when a Tape is
// active and some input requires a gradient, the node also keeps references
// to its parents and a backward rule, and is recorded on the tape in creation
// order. Tape::backward replays that list in reverse, which is a valid
// topological order by construction. With no active Tape (evaluation mode)
// ops compute plain values and build no graph.
//
// Gradients accumulate (sum) across uses; call zero_grad between steps.

using Shape = std::vector<int>;

std::size_t shape_numel(const Shape& shape);  // throws InvalidShapeError on dim <= 0

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::string name;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  std::size_t size() const { return value.size(); }
  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
  void zero_grad() {
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
  }
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  bool defined() const { return node_ != nullptr; }
  std::size_t size() const { return node_->value.size(); }
  int dim(int i) const { return node_->shape[static_cast<std::size_t>(i)]; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  double operator[](std::size_t i) const { return node_->value[i]; }

  // Accessors returning references are lvalue-qualified; on a temporary
  // handle they hand back copies instead, so `for (double v : f(x).values())`
  // cannot dangle.
  const Shape& shape() const& { return node_->shape; }
  Shape shape() && { return node_->shape; }
  const std::vector<double>& values() const& { return node_->value; }
  std::vector<double> values() && { return node_->value; }
  std::vector<double>& mutable_values() { return node_->value; }

  // Value of a 1-element tensor.
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  const std::vector<double>& grad() const&;
  std::vector<double> grad() &&;
  void zero_grad() const { node_->zero_grad(); }
  void ensure_grad() const { node_->ensure_grad(); }

  const std::string& name() const { return node_->name; }
  void set_name(std::string n) { node_->name = std::move(n); }

  // Copy of the values as a fresh constant leaf (cuts the graph).
  Tensor detach() const;

  std::shared_ptr<Node>& node() { return node_; }
  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// --- Tape ------------------------------------------------------------------

class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Seeds d(loss)/d(loss) = 1 and replays recorded ops in reverse, summing
  // gradients into every requires_grad tensor reachable from the loss.
  void backward(const Tensor& loss);

  std::size_t size() const { return nodes_.size(); }
  void record(std::shared_ptr<Node> node) { nodes_.push_back(std::move(node)); }

  static Tape* current();
  static bool recording();

 private:
  std::vector<std::shared_ptr<Node>> nodes_;
};

// Suppresses recording while alive (used for numeric probes inside an
// otherwise-recorded region).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

// --- Construction ----------------------------------------------------------

struct Initializer {
  enum class Kind { Zeros, Uniform };
  Kind kind = Kind::Zeros;
  double lo = 0.0;
  double hi = 0.0;

  static Initializer zeros() { return {Kind::Zeros, 0.0, 0.0}; }
  static Initializer uniform(double lo, double hi) { return {Kind::Uniform, lo, hi}; }
};

Tensor make_constant(Shape shape, std::vector<double> values);
Tensor make_scalar(double v);
Tensor make_zeros(Shape shape);
// Trainable leaf; values drawn per the initializer (rng required for uniform).
Tensor make_parameter(Shape shape, const Initializer& init, Rng* rng = nullptr,
                      std::string name = "");

// --- Operations ------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(const Tensor& a, double c);
Tensor neg(const Tensor& a);

// {m,k} x {k,n} -> {m,n}; {m,k} x {k} -> {m}
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor dot(const Tensor& a, const Tensor& b);  // {n} . {n} -> {1}

Tensor tanh(const Tensor& a);
Tensor logistic(const Tensor& a);     // 1 / (1 + e^-x)
Tensor log_sigmoid(const Tensor& a);  // -softplus(-x), stable at large |x|
Tensor log(const Tensor& a);          // throws DomainError on x <= 0

Tensor softmax(const Tensor& a);      // 1-D
Tensor log_softmax(const Tensor& a);  // 1-D
Tensor logsumexp(const Tensor& a);    // 1-D -> {1}; finite for inputs up to +-1e4

Tensor concat(std::span<const Tensor> parts);  // 1-D
Tensor slice(const Tensor& a, int begin, int len);
Tensor select(const Tensor& a, int index);  // 1-D -> {1}
Tensor row(const Tensor& matrix, int r);    // {m,n} -> {n}
Tensor sum(const Tensor& a);                // -> {1}

// Inverted dropout: keeps entries with prob (1 - rate) scaled by 1/(1 - rate).
// rate == 0 or rng == nullptr is the identity (evaluation mode).
Tensor dropout(const Tensor& a, double rate, Rng* rng);

// --- Gradient checking -----------------------------------------------------

struct FiniteDiffResult {
  double max_rel_error = 0.0;
  std::string param;
  std::size_t index = 0;
};

// Central differences against the tape gradient. loss_fn must be
// deterministic (dropout disabled) and return a scalar built from `params`.
// Relative error per coordinate: |a - n| / max(|a|, |n|, 1e-8).
// Throws NumericError naming the parameter coordinate if a probe is non-finite.
FiniteDiffResult finite_diff_check(const std::function<Tensor()>& loss_fn,
                                   const std::vector<NamedTensor>& params,
                                   double epsilon);

void zero_all_grads(const std::vector<NamedTensor>& params);

}  // namespace hclm
