#pragma once

// Reverse-mode differentiation over small dense row-major tensors.
//
// Nodes are appended in evaluation order, so the tape is already
// topologically sorted; backward() walks it once in reverse. Rows are the
// batch dimension throughout: a (B x n) tensor holds B samples of length n.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace hmlr::ad {

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const noexcept { return rows * cols; }
  bool operator==(const Shape&) const = default;
};

std::string to_string(Shape s);

class Tape;

class Var {
 public:
  Var() = default;

  std::size_t id() const noexcept { return id_; }
  Tape& tape() const noexcept { return *tape_; }
  Shape shape() const;
  std::span<const double> value() const;
  // Only for 1x1 tensors.
  double item() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  // Adjoint propagation for one node: reads the node's own grad and adds
  // contributions into the grads of its inputs.
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Shape shape, std::vector<double> value);
  Var constant(Shape shape, std::span<const double> value);
  Var parameter(Shape shape, std::vector<double> value);
  Var parameter(Shape shape, std::span<const double> value);

  // Seeds d(root)/d(root) = 1; root must be 1x1. A tape supports one backward pass.
  void backward(Var root);
  // Zero for parameters that did not influence the root.
  std::span<const double> grad(Var v);

  std::size_t size() const noexcept { return nodes_.size(); }
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }

  // Used by primitives.
  Var push(Shape shape, std::vector<double> value, std::vector<std::size_t> inputs, BackwardFn fn);
  std::span<const double> value_of(std::size_t id) const { return nodes_[id].value; }
  Shape shape_of(std::size_t id) const { return nodes_[id].shape; }
  std::span<const double> grad_of(std::size_t id) const { return nodes_[id].grad; }
  // Empty span when the node does not need a gradient.
  std::span<double> grad_sink(std::size_t id);

 private:
  struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool needs_grad = false;
  };

  Var leaf(Shape shape, std::vector<double> value, bool needs_grad);

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

// Elementwise binary ops broadcast either operand when it is 1x1, 1xC
// (row) or Rx1 (column) against the other.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);
Var neg(Var a);

// (m x k)(k x n)
Var matmul(Var a, Var b);
// (m x k)(n x k)^T
Var matmul_nt(Var a, Var b);
// Per-row small matrix-vector product. mats is (B or 1) x (rows*cols), each
// row a row-major rows x cols matrix; x is B x cols; result is B x rows.
Var matvec(Var mats, Var x, std::size_t rows);

Var sum(Var a);
Var mean(Var a);
Var square(Var a);
// d|x|/dx at 0 is taken as 0.
Var abs(Var a);
Var exp(Var a);
Var max_const(Var a, double c);
Var elu(Var a, double alpha = 1.0);
Var softplus(Var a);
Var concat_cols(std::span<const Var> parts);
Var reshape(Var a, Shape shape);
Var slice_cols(Var a, std::size_t start, std::size_t count);

// Posterior mean of a scalar drawn uniformly from `levels` observed as
// z = s + noise: sum_s s exp(-(z-s)^2/v) / sum_s exp(-(z-s)^2/v).
// z is B x n; var broadcasts like the binary ops and must be positive.
Var gaussian_denoise(Var z, Var var, std::span<const double> levels);

double elu_value(double v, double alpha = 1.0);
double softplus_value(double v);
double softplus_inverse(double y);
double gaussian_denoise_value(double z, double var, std::span<const double> levels);

}  // namespace hmlr::ad
