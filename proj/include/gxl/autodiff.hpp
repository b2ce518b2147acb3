// Copyright 2026 gxlstm authors. Apache 2.0 License.

#pragma once

#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "gxl/tensor.hpp"

namespace gxl {

class Tape;

// Trainable tensor with a persistent gradient slot. Parameters outlive the
// tapes that use them; backward() accumulates into grad.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(Tensor::zeros(value.shape())) {}

  void zero_grad() { grad = Tensor::zeros(value.shape()); }
};

// Handle to one node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  const Tensor& value() const;
  // Gradient of the last backward() target w.r.t. this node. Empty tensor
  // if the node was not reached.
  const Tensor& grad() const;
  int64_t rows() const { return value().rows(); }
  int64_t cols() const { return value().cols(); }
  bool valid() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* t, int id) : tape_(t), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Define-by-run reverse-mode tape over rank-2 tensors. A tape is built per
// forward pass; backward() walks the op records in reverse creation order,
// which is a reverse topological order by construction. Every op validates
// that its output is finite and throws NumericError otherwise.
class Tape {
 public:
  Tape() = default;
  explicit Tape(bool check_finite) : check_finite_(check_finite) {}

  // Non-trainable input; no gradient is propagated into it.
  Var constant(Tensor v);
  Var scalar(double v) { return constant(Tensor::scalar(v)); }
  // Trainable leaf; after backward(), d(loss)/d(p) is added to p.grad.
  // Repeated calls with the same parameter return the same node.
  Var leaf(Parameter& p);
  Var leaf(Parameter* p) { return leaf(*p); }

  // --- elementwise / broadcast ---------------------------------------
  // b may share a's shape, or be [1, n] (broadcast down rows) or [m, 1]
  // (broadcast across columns).
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var div(Var a, Var b);
  Var neg(Var a);
  Var scale(Var a, double c);
  Var add_scalar(Var a, double c);
  Var sigmoid(Var a);
  Var log_sigmoid(Var a);
  Var tanh(Var a);
  Var exp(Var a);
  Var log(Var a);
  Var sqrt(Var a);
  Var pow_scalar(Var a, double p);  // requires positive inputs
  Var gelu(Var a);                  // exact Gaussian-CDF form
  Var clamp_min(Var a, double floor);
  Var maximum(Var a, Var b);        // same shape; ties route gradient to a

  // --- linear algebra / structure ------------------------------------
  Var matmul(Var a, Var b);  // [m,k] x [k,n]
  Var transpose(Var a);
  Var reshape(Var a, Shape shape);
  Var concat_cols(const std::vector<Var>& parts);
  Var slice_cols(Var a, int64_t start, int64_t len);
  Var slice_rows(Var a, int64_t start, int64_t len);
  // [m, G*s] -> [m, G*s*r]: each contiguous group of s columns repeated r
  // times in place. group=1 repeats single columns; group=cols tiles the
  // whole row.
  Var tile_cols_grouped(Var a, int64_t group, int64_t repeat);
  // [m, G*s] -> [m, G]: sums each contiguous group of s columns.
  Var sum_cols_grouped(Var a, int64_t group);

  // --- reductions ------------------------------------------------------
  Var sum(Var a);      // -> [1,1]
  Var mean(Var a);     // -> [1,1]
  Var row_sum(Var a);  // [m,n] -> [m,1]

  // --- fused / task-level ops ------------------------------------------
  Var softmax(Var a);  // row-wise
  // Mean negative log softmax probability of the gold class, stabilized by
  // max-subtraction. labels[i] in {0..cols-1}.
  Var softmax_cross_entropy(Var logits, const std::vector<int>& labels);
  Var layer_norm(Var a, Var gamma, Var beta, double eps = 1e-5);

  // Populates gradients for every node reachable from loss and adds leaf
  // gradients into their parameters. loss must be a scalar.
  void backward(Var loss);

  size_t node_count() const { return nodes_.size(); }
  const Tensor& value_of(int id) const { return nodes_[static_cast<size_t>(id)].value; }
  const Tensor& grad_of(int id) const { return nodes_[static_cast<size_t>(id)].grad; }

  // Sums g over broadcast dimensions so it matches `shape`.
  static Tensor reduce_to(const Tensor& g, const Shape& shape);

 private:
  friend class Var;
  using BackFn = std::function<void(Tape&, int)>;

  struct Node {
    Tensor value;
    Tensor grad;  // allocated on demand during backward
    std::vector<int> parents;
    BackFn back;
    const char* op = "";
    bool needs_grad = false;
    Parameter* param = nullptr;
  };

  Var make(const char* op, Tensor value, std::vector<int> parents, BackFn back);
  Node& node(int id) { return nodes_[static_cast<size_t>(id)]; }
  void accumulate(int id, const Tensor& g);
  static void check_broadcastable(const Tensor& a, const Tensor& b, const char* op);

  std::vector<Node> nodes_;
  std::unordered_map<Parameter*, int> leaf_cache_;
  bool check_finite_ = true;
};

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);

}  // namespace gxl
