#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "grapeqa/tensor.hpp"

namespace grapeqa::ad {

/// Learnable tensor with its gradient accumulator.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  int group = 0;

  Parameter() = default;
  Parameter(std::string n, Tensor v, int g = 0)
      : name(std::move(n)), value(std::move(v)), grad(value.rows, value.cols), group(g) {}
  void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), 0.0); }
};

class Tape;

/// Handle to a value recorded on a tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t index = 0;

  const Tensor& value() const;
  std::size_t rows() const { return value().rows; }
  std::size_t cols() const { return value().cols; }
};

/// Operation tape for one forward pass.
///
/// Nodes are appended in evaluation order, which is a topological order, so
/// backward() walks them once in reverse.
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Leaf bound to a parameter; gradients flow into param.grad. Repeated
  /// calls within one pass return the same leaf.
  Var param(Parameter& p);
  Var push(Tensor value, Backward backward);

  const Tensor& value(std::size_t i) const { return nodes_[i].value; }
  /// Gradient buffer of node i, allocated (zeroed) on first use.
  Tensor& grad(std::size_t i);
  bool has_grad(std::size_t i) const { return !nodes_[i].grad.data.empty(); }

  /// Reverse sweep from a 1 x 1 loss, then clears the tape.
  /// Throws std::invalid_argument for a non-scalar loss.
  void backward(Var loss);
  void clear();
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    Backward backward;
    Parameter* param = nullptr;
  };
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> param_leaves_;
};

// Matrix primitives. Shapes are checked; mismatches throw std::invalid_argument.

Var matmul(Var a, Var b);                 // (m x k)(k x n)
Var add(Var a, Var b);                    // same shape
Var add_row(Var x, Var bias);             // bias 1 x n broadcast over rows
Var linear(Var x, Var w, Var bias);       // x w + bias
Var scale(Var x, double s);
Var gelu(Var x);                          // exact erf form
Var sigmoid(Var x);
Var concat_cols(const std::vector<Var>& parts);  // equal row counts
Var concat_rows(const std::vector<Var>& parts);  // equal column counts
Var gather_rows(Var x, std::vector<std::size_t> rows);
Var row_dot(Var a, Var b);                // m x 1 of per-row inner products
Var mul_rows(Var x, Var w);               // row i of x times scalar w(i, 0)
/// Softmax of an m x 1 column within each segment.
Var segment_softmax(Var scores, std::vector<std::size_t> segment, std::size_t num_segments);
/// Row sums per segment, accumulated in row order.
Var segment_sum(Var x, std::vector<std::size_t> segment, std::size_t num_segments);
Var mean_rows(Var x, std::vector<std::size_t> rows);  // 1 x n mean over the listed rows
Var sum_all(Var x);                       // 1 x 1
Var dot(Var a, Var b);                    // 1 x 1 sum of elementwise products
/// -log softmax(logits)[gold] for a 1 x n row.
Var cross_entropy(Var logits, std::size_t gold);

}  // namespace grapeqa::ad
