#include "hclm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hclm {

namespace {

// Stack of active tapes; nullptr entries mark NoGrad regions.
thread_local std::vector<Tape*> g_tape_stack;

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << "]";
  return os.str();
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw InvalidShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                            " vs " + shape_str(b.shape()));
}

void check_vector(const Tensor& a, const char* op) {
  if (a.rank() != 1)
    throw InvalidShapeError(std::string(op) + ": expected 1-D tensor, got " +
                            shape_str(a.shape()));
}

std::shared_ptr<Node> new_node(Shape shape) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value.assign(shape_numel(n->shape), 0.0);
  return n;
}

// Finalizes an op node: keeps the graph edges only when a tape is recording
// and a parent carries gradient; otherwise the node degrades to a constant.
Tensor finish(std::shared_ptr<Node> n, std::vector<std::shared_ptr<Node>> parents,
              std::function<void(Node&)> backward) {
  bool track = false;
  if (Tape::recording()) {
    for (const auto& p : parents)
      if (p->requires_grad) {
        track = true;
        break;
      }
  }
  if (track) {
    n->requires_grad = true;
    n->parents = std::move(parents);
    n->backward = std::move(backward);
    Tape::current()->record(n);
  }
  return Tensor(std::move(n));
}

double stable_logsumexp(std::span<const double> xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;  // all -inf (or a +inf dominates)
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  if (shape.empty()) throw InvalidShapeError("empty shape");
  std::size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw InvalidShapeError("non-positive dimension in shape " + shape_str(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

double Tensor::item() const {
  if (size() != 1) throw ContractViolation("item(): tensor is not scalar");
  return node_->value[0];
}

const std::vector<double>& Tensor::grad() const& {
  node_->ensure_grad();
  return node_->grad;
}

std::vector<double> Tensor::grad() && {
  node_->ensure_grad();
  return node_->grad;
}

Tensor Tensor::detach() const {
  auto n = std::make_shared<Node>();
  n->shape = node_->shape;
  n->value = node_->value;
  n->name = node_->name;
  return Tensor(std::move(n));
}

// --- Tape -------------------------------------------------------------------

Tape::Tape() { g_tape_stack.push_back(this); }

Tape::~Tape() {
  if (!g_tape_stack.empty() && g_tape_stack.back() == this) g_tape_stack.pop_back();
}

Tape* Tape::current() { return g_tape_stack.empty() ? nullptr : g_tape_stack.back(); }

bool Tape::recording() { return current() != nullptr; }

void Tape::backward(const Tensor& loss) {
  if (loss.size() != 1) throw ContractViolation("backward: loss must be a 1-element tensor");
  if (!loss.node()->requires_grad)
    throw ContractViolation("backward: loss does not depend on any tracked parameter");
  loss.node()->ensure_grad();
  loss.node()->grad[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node& n = **it;
    if (n.grad.empty() || !n.backward) continue;  // no incoming gradient
    n.backward(n);
  }
}

NoGradGuard::NoGradGuard() { g_tape_stack.push_back(nullptr); }

NoGradGuard::~NoGradGuard() {
  if (!g_tape_stack.empty() && g_tape_stack.back() == nullptr) g_tape_stack.pop_back();
}

// --- Construction -----------------------------------------------------------

Tensor make_constant(Shape shape, std::vector<double> values) {
  const std::size_t n = shape_numel(shape);
  if (values.size() != n)
    throw InvalidShapeError("make_constant: values length does not match shape");
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  return Tensor(std::move(node));
}

Tensor make_scalar(double v) { return make_constant({1}, {v}); }

Tensor make_zeros(Shape shape) {
  const std::size_t n = shape_numel(shape);
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value.assign(n, 0.0);
  return Tensor(std::move(node));
}

Tensor make_parameter(Shape shape, const Initializer& init, Rng* rng, std::string name) {
  Tensor t = make_zeros(std::move(shape));
  if (init.kind == Initializer::Kind::Uniform) {
    if (rng == nullptr) throw ContractViolation("make_parameter: uniform init needs an rng");
    for (double& v : t.mutable_values()) v = rng->uniform(init.lo, init.hi);
  }
  t.node()->requires_grad = true;
  t.node()->ensure_grad();
  t.set_name(std::move(name));
  return t;
}

// --- Elementwise ------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  auto n = new_node(a.shape());
  for (std::size_t i = 0; i < n->size(); ++i) n->value[i] = a[i] + b[i];
  return finish(n, {a.node(), b.node()}, [](Node& self) {
    for (int k = 0; k < 2; ++k) {
      Node& p = *self.parents[static_cast<std::size_t>(k)];
      if (!p.requires_grad) continue;
      p.ensure_grad();
      for (std::size_t i = 0; i < self.size(); ++i) p.grad[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  auto n = new_node(a.shape());
  for (std::size_t i = 0; i < n->size(); ++i) n->value[i] = a[i] - b[i];
  return finish(n, {a.node(), b.node()}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (std::size_t i = 0; i < self.size(); ++i) pa.grad[i] += self.grad[i];
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (std::size_t i = 0; i < self.size(); ++i) pb.grad[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  auto n = new_node(a.shape());
  for (std::size_t i = 0; i < n->size(); ++i) n->value[i] = a[i] * b[i];
  return finish(n, {a.node(), b.node()}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (std::size_t i = 0; i < self.size(); ++i) pa.grad[i] += self.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (std::size_t i = 0; i < self.size(); ++i) pb.grad[i] += self.grad[i] * pa.value[i];
    }
  });
}

Tensor scale(const Tensor& a, double c) {
  auto n = new_node(a.shape());
  for (std::size_t i = 0; i < n->size(); ++i) n->value[i] = a[i] * c;
  return finish(n, {a.node()}, [c](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (std::size_t i = 0; i < self.size(); ++i) p.grad[i] += self.grad[i] * c;
  });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

// --- Linear algebra ---------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2) throw InvalidShapeError("matmul: left operand must be 2-D");
  const int m = a.dim(0), k = a.dim(1);
  const bool vec = (b.rank() == 1);
  const int k2 = vec ? b.dim(0) : b.dim(0);
  const int ncols = vec ? 1 : b.dim(1);
  if (b.rank() > 2) throw InvalidShapeError("matmul: right operand must be 1-D or 2-D");
  if (k != k2)
    throw InvalidShapeError("matmul: inner dimensions disagree (" + std::to_string(k) + " vs " +
                            std::to_string(k2) + ")");
  auto n = new_node(vec ? Shape{m} : Shape{m, ncols});
  const double* A = a.values().data();
  const double* B = b.values().data();
  double* C = n->value.data();
  for (int i = 0; i < m; ++i) {
    const double* arow = A + static_cast<std::size_t>(i) * k;
    double* crow = C + static_cast<std::size_t>(i) * ncols;
    for (int j = 0; j < k; ++j) {
      const double aij = arow[j];
      if (aij == 0.0) continue;
      const double* brow = B + static_cast<std::size_t>(j) * ncols;
      for (int c = 0; c < ncols; ++c) crow[c] += aij * brow[c];
    }
  }
  return finish(n, {a.node(), b.node()}, [m, k, ncols](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    const double* G = self.grad.data();
    if (pa.requires_grad) {
      pa.ensure_grad();
      // dA = G . B^T
      for (int i = 0; i < m; ++i) {
        const double* grow = G + static_cast<std::size_t>(i) * ncols;
        double* garow = pa.grad.data() + static_cast<std::size_t>(i) * k;
        for (int j = 0; j < k; ++j) {
          const double* brow = pb.value.data() + static_cast<std::size_t>(j) * ncols;
          double acc = 0.0;
          for (int c = 0; c < ncols; ++c) acc += grow[c] * brow[c];
          garow[j] += acc;
        }
      }
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      // dB = A^T . G
      for (int i = 0; i < m; ++i) {
        const double* arow = pa.value.data() + static_cast<std::size_t>(i) * k;
        const double* grow = G + static_cast<std::size_t>(i) * ncols;
        for (int j = 0; j < k; ++j) {
          const double aij = arow[j];
          if (aij == 0.0) continue;
          double* gbrow = pb.grad.data() + static_cast<std::size_t>(j) * ncols;
          for (int c = 0; c < ncols; ++c) gbrow[c] += aij * grow[c];
        }
      }
    }
  });
}

Tensor dot(const Tensor& a, const Tensor& b) {
  check_vector(a, "dot");
  check_vector(b, "dot");
  check_same_shape(a, b, "dot");
  auto n = new_node({1});
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  n->value[0] = acc;
  return finish(n, {a.node(), b.node()}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    const double g = self.grad[0];
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (std::size_t i = 0; i < pa.value.size(); ++i) pa.grad[i] += g * pb.value[i];
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (std::size_t i = 0; i < pb.value.size(); ++i) pb.grad[i] += g * pa.value[i];
    }
  });
}

// --- Nonlinearities ---------------------------------------------------------

Tensor tanh(const Tensor& a) {
  auto n = new_node(a.shape());
  for (std::size_t i = 0; i < n->size(); ++i) n->value[i] = std::tanh(a[i]);
  return finish(n, {a.node()}, [](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (std::size_t i = 0; i < self.size(); ++i) {
      const double y = self.value[i];
      p.grad[i] += self.grad[i] * (1.0 - y * y);
    }
  });
}

Tensor logistic(const Tensor& a) {
  auto n = new_node(a.shape());
  for (std::size_t i = 0; i < n->size(); ++i) {
    const double x = a[i];
    n->value[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                           : std::exp(x) / (1.0 + std::exp(x));
  }
  return finish(n, {a.node()}, [](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (std::size_t i = 0; i < self.size(); ++i) {
      const double y = self.value[i];
      p.grad[i] += self.grad[i] * y * (1.0 - y);
    }
  });
}

Tensor log_sigmoid(const Tensor& a) {
  auto n = new_node(a.shape());
  for (std::size_t i = 0; i < n->size(); ++i) {
    const double x = a[i];
    // -softplus(-x)
    n->value[i] = x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
  }
  return finish(n, {a.node()}, [](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (std::size_t i = 0; i < self.size(); ++i) {
      // d/dx log sigma(x) = 1 - sigma(x) = 1 - e^{log sigma(x)}
      p.grad[i] += self.grad[i] * (1.0 - std::exp(self.value[i]));
    }
  });
}

Tensor log(const Tensor& a) {
  auto n = new_node(a.shape());
  for (std::size_t i = 0; i < n->size(); ++i) {
    if (a[i] <= 0.0) throw DomainError("log: non-positive input");
    n->value[i] = std::log(a[i]);
  }
  return finish(n, {a.node()}, [](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (std::size_t i = 0; i < self.size(); ++i) p.grad[i] += self.grad[i] / p.value[i];
  });
}

// --- Softmax family ---------------------------------------------------------

Tensor softmax(const Tensor& a) {
  check_vector(a, "softmax");
  auto n = new_node(a.shape());
  const double lse = stable_logsumexp(a.values());
  for (std::size_t i = 0; i < n->size(); ++i) n->value[i] = std::exp(a[i] - lse);
  return finish(n, {a.node()}, [](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    double inner = 0.0;
    for (std::size_t i = 0; i < self.size(); ++i) inner += self.grad[i] * self.value[i];
    for (std::size_t i = 0; i < self.size(); ++i)
      p.grad[i] += self.value[i] * (self.grad[i] - inner);
  });
}

Tensor log_softmax(const Tensor& a) {
  check_vector(a, "log_softmax");
  auto n = new_node(a.shape());
  const double lse = stable_logsumexp(a.values());
  for (std::size_t i = 0; i < n->size(); ++i) n->value[i] = a[i] - lse;
  return finish(n, {a.node()}, [](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    double gsum = 0.0;
    for (std::size_t i = 0; i < self.size(); ++i) gsum += self.grad[i];
    for (std::size_t i = 0; i < self.size(); ++i)
      p.grad[i] += self.grad[i] - std::exp(self.value[i]) * gsum;
  });
}

Tensor logsumexp(const Tensor& a) {
  check_vector(a, "logsumexp");
  auto n = new_node({1});
  n->value[0] = stable_logsumexp(a.values());
  return finish(n, {a.node()}, [](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    const double g = self.grad[0];
    const double y = self.value[0];
    for (std::size_t i = 0; i < p.value.size(); ++i)
      p.grad[i] += g * std::exp(p.value[i] - y);
  });
}

// --- Shape ops ---------------------------------------------------------------

Tensor concat(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractViolation("concat: no inputs");
  int total = 0;
  for (const Tensor& p : parts) {
    check_vector(p, "concat");
    total += p.dim(0);
  }
  auto n = new_node({total});
  std::size_t off = 0;
  std::vector<std::shared_ptr<Node>> parents;
  parents.reserve(parts.size());
  for (const Tensor& p : parts) {
    std::copy(p.values().begin(), p.values().end(), n->value.begin() + static_cast<long>(off));
    off += p.size();
    parents.push_back(p.node());
  }
  return finish(n, std::move(parents), [](Node& self) {
    std::size_t off2 = 0;
    for (auto& pp : self.parents) {
      Node& p = *pp;
      if (p.requires_grad) {
        p.ensure_grad();
        for (std::size_t i = 0; i < p.value.size(); ++i) p.grad[i] += self.grad[off2 + i];
      }
      off2 += p.value.size();
    }
  });
}

Tensor slice(const Tensor& a, int begin, int len) {
  check_vector(a, "slice");
  if (begin < 0 || len <= 0 || begin + len > a.dim(0))
    throw InvalidShapeError("slice: range out of bounds");
  auto n = new_node({len});
  for (int i = 0; i < len; ++i) n->value[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(begin + i)];
  return finish(n, {a.node()}, [begin](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (std::size_t i = 0; i < self.size(); ++i)
      p.grad[static_cast<std::size_t>(begin) + i] += self.grad[i];
  });
}

Tensor select(const Tensor& a, int index) {
  check_vector(a, "select");
  if (index < 0 || index >= a.dim(0)) throw InvalidShapeError("select: index out of bounds");
  auto n = new_node({1});
  n->value[0] = a[static_cast<std::size_t>(index)];
  return finish(n, {a.node()}, [index](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    p.grad[static_cast<std::size_t>(index)] += self.grad[0];
  });
}

Tensor row(const Tensor& matrix, int r) {
  if (matrix.rank() != 2) throw InvalidShapeError("row: expected 2-D tensor");
  const int rows = matrix.dim(0), cols = matrix.dim(1);
  if (r < 0 || r >= rows) throw ContractViolation("row: index out of range");
  auto n = new_node({cols});
  const std::size_t base = static_cast<std::size_t>(r) * cols;
  for (int c = 0; c < cols; ++c) n->value[static_cast<std::size_t>(c)] = matrix[base + c];
  return finish(n, {matrix.node()}, [base](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (std::size_t i = 0; i < self.size(); ++i) p.grad[base + i] += self.grad[i];
  });
}

Tensor sum(const Tensor& a) {
  auto n = new_node({1});
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i];
  n->value[0] = acc;
  return finish(n, {a.node()}, [](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    const double g = self.grad[0];
    for (std::size_t i = 0; i < p.value.size(); ++i) p.grad[i] += g;
  });
}

Tensor dropout(const Tensor& a, double rate, Rng* rng) {
  if (rate < 0.0 || rate >= 1.0) throw ContractViolation("dropout: rate must be in [0,1)");
  if (rate == 0.0 || rng == nullptr) return a;
  const double keep = 1.0 - rate;
  std::vector<double> mask(a.size());
  for (double& m : mask) m = (rng->uniform() < keep) ? 1.0 / keep : 0.0;
  return mul(a, make_constant(a.shape(), std::move(mask)));
}

// --- Gradient checking --------------------------------------------------------

void zero_all_grads(const std::vector<NamedTensor>& params) {
  for (const auto& p : params) p.tensor.node()->zero_grad();
}

FiniteDiffResult finite_diff_check(const std::function<Tensor()>& loss_fn,
                                   const std::vector<NamedTensor>& params, double epsilon) {
  if (epsilon <= 0.0) throw ContractViolation("finite_diff_check: epsilon must be positive");
  // Analytic pass.
  std::vector<std::vector<double>> analytic;
  {
    zero_all_grads(params);
    Tape tape;
    Tensor loss = loss_fn();
    if (!std::isfinite(loss.item()))
      throw NumericError("finite_diff_check: loss is non-finite at the base point");
    tape.backward(loss);
    analytic.reserve(params.size());
    for (const auto& p : params) analytic.push_back(p.tensor.grad());
  }
  // Numeric probes.
  FiniteDiffResult result;
  NoGradGuard no_grad;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor t = params[pi].tensor;
    std::vector<double>& v = t.mutable_values();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double saved = v[i];
      v[i] = saved + epsilon;
      const double lp = loss_fn().item();
      v[i] = saved - epsilon;
      const double lm = loss_fn().item();
      v[i] = saved;
      if (!std::isfinite(lp) || !std::isfinite(lm))
        throw NumericError("finite_diff_check: non-finite loss while perturbing " +
                           params[pi].name + "[" + std::to_string(i) + "]");
      const double numeric = (lp - lm) / (2.0 * epsilon);
      const double a = analytic[pi][i];
      const double rel =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.param = params[pi].name;
        result.index = i;
      }
    }
  }
  return result;
}

}  // namespace hclm
