#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mlgib/common.hpp"

namespace mlgib {

// A named, trainable array. Parameters live outside any tape; each training
// step registers them as leaves on a fresh tape. Gradients accumulate in
// `grad` across backward calls until zero_grad().
struct Parameter {
  std::string name;
  std::vector<size_t> shape;
  std::vector<double> value;
  std::vector<double> grad;

  Parameter() = default;
  Parameter(std::string n, std::vector<size_t> s)
      : name(std::move(n)), shape(std::move(s)) {
    size_t total = 1;
    for (size_t d : shape) total *= d;
    value.assign(total, 0.0);
    grad.assign(total, 0.0);
  }

  size_t size() const { return value.size(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

class Tape;

// Lightweight handle into a tape node.
struct Tensor {
  Tape* tape = nullptr;
  uint32_t id = 0;

  const std::vector<size_t>& shape() const;
  const std::vector<double>& values() const;
  const std::vector<double>& grad() const;
  size_t size() const;
  size_t rows() const;
  size_t cols() const;
  double scalar() const;
  bool requires_grad() const;
};

// Reverse-mode tape over dense double tensors. Nodes are recorded in
// topological order as ops execute; backward() sweeps them once in reverse.
// Tape-internal gradients are per-call scratch; Parameter gradients
// accumulate across calls.
class Tape {
 public:
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  bool grad_enabled() const { return grad_enabled_; }

  Tensor input(std::vector<size_t> shape, std::vector<double> values,
               bool requires_grad = false);
  Tensor constant(std::vector<size_t> shape, std::vector<double> values) {
    return input(std::move(shape), std::move(values), false);
  }
  Tensor scalar_constant(double v) { return input({1}, {v}, false); }
  Tensor param(Parameter& p);

  void backward(const Tensor& loss);

  size_t num_nodes() const { return nodes_.size(); }

  struct Node {
    std::vector<size_t> shape;
    std::vector<double> values;
    std::vector<double> grad;
    bool requires_grad = false;
    Parameter* source = nullptr;
    std::function<void(Tape&)> backward;
  };

  Node& node(uint32_t id) { return nodes_[id]; }
  const Node& node(uint32_t id) const { return nodes_[id]; }

  Tensor make_node(std::vector<size_t> shape, std::vector<double> values,
                   bool requires_grad, std::function<void(Tape&)> backward);

 private:
  std::vector<Node> nodes_;
  bool grad_enabled_;
};

// ---- elementwise ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);
Tensor reciprocal(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor softplus(const Tensor& a);

// ---- shape / indexing ----
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor gather_rows(const Tensor& a, const std::vector<uint32_t>& idx);
Tensor stack_cols(const std::vector<Tensor>& cols);

// ---- reductions / broadcasts ----
Tensor row_sum(const Tensor& a);              // [n,m] -> [n]
Tensor sum(const Tensor& a);                  // -> [1]
Tensor add_rowvec(const Tensor& a, const Tensor& v);  // [n,m] + [m]
Tensor mul_rowvec(const Tensor& a, const Tensor& v);  // [n,m] * [m]
Tensor logsumexp_rows(const Tensor& a);       // [n,m] -> [n]

// ---- segmented ops over variable-length neighbor groups ----
// `segments` holds one non-decreasing group id per row/entry; groups are
// contiguous runs. Both validate ordering.
Tensor segment_sum(const Tensor& a, const std::vector<uint32_t>& segments,
                   size_t num_segments);      // [E,h] -> [num_segments,h]
Tensor segment_softmax(const Tensor& scores,
                       const std::vector<uint32_t>& segments);  // [E] -> [E]

// ---- compositions ----
// Diagonal-Gaussian log density per row: sum_j [-1/2 log(2 pi var_j)
// - (z_j - mu_j)^2 / (2 var_j)].  All inputs [n,h]; result [n].
Tensor gaussian_log_density_rows(const Tensor& z, const Tensor& mu,
                                 const Tensor& var);
// Vector form; returns [1].
Tensor gaussian_log_density(const Tensor& z, const Tensor& mu,
                            const Tensor& var);
// Numerically stable sum of -y log s(x) - (1-y) log(1-s(x)) over all entries.
Tensor bce_with_logits_sum(const Tensor& logits, const Tensor& targets);

// ---- finite-difference oracle ----
// Central differences per coordinate of a scalar function.
std::vector<double> fd_gradient(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& point, double h = 1e-5);

// Max relative error between the FD gradient and `analytic`, with
// max(|a|,|b|,1e-8) in the denominator.
double finite_difference_check(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& point, const std::vector<double>& analytic,
    double h = 1e-5);

}  // namespace mlgib
