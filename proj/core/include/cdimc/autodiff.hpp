#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cdimc/matrix.hpp"

namespace cdimc {

// A trainable tensor. The gradient accumulates across backward passes until
// zero_grad() is called.
struct Parameter {
  Matrix value;
  Matrix grad;

  Parameter() = default;
  explicit Parameter(Matrix v) : value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(); }
};

class Tape;

// Handle to a node recorded on a Tape. Cheap to copy; only valid while the
// owning tape is alive and not cleared.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  // Gradient of the last backward() loss with respect to this node. Empty if
  // the node does not lead to any parameter.
  const Matrix& grad() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  Tape* tape() const { return tape_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Reverse-mode gradient recorder. Nodes are appended in evaluation order, so
// the vector order is already a topological order of the expression graph.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var parameter(Parameter& p);

  // Propagates d(loss)/d(node) to every node that leads to a parameter and
  // adds the parameter parts into Parameter::grad. Node gradients from a
  // previous call are reset first, parameter gradients are not.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

  // Used by the op implementations.
  Var record(Matrix value, std::vector<std::size_t> inputs, BackwardFn backward,
             const char* op_name);
  const Matrix& value_of(std::size_t id) const {
    const Node& node = nodes_[id];
    return node.param != nullptr ? node.param->value : node.value;
  }
  const Matrix& grad_of(std::size_t id) const { return nodes_[id].grad; }
  bool needs_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  // Adds `delta` into the gradient of node `id` (allocated on first use).
  void accumulate(std::size_t id, const Matrix& delta);
  std::size_t id_of(Var v) const;

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };

  std::vector<Node> nodes_;
};

// weight * x + bias * 1^T. x is (in x batch), weight (out x in), bias (out x 1).
Var affine(Var x, Var weight, Var bias);

// Elementwise max(x, 0). The subgradient at 0 is 0.
Var relu(Var x);

Var sub(Var a, Var b);

// ||x diag(mask)||_F^2 with a 0/1 column mask.
Var masked_frobenius(Var x, const Vector& column_mask);

// Tr(H L H^T) for a graph Laplacian L over the columns of H.
Var laplacian_trace(Var h, const SparseMatrix& laplacian);

// Column-wise weighted mean of per-view codes: column i of the result is
// sum_v m_v[i] * codes_v[:, i] / sum_v m_v[i].
Var mean_fuse(std::span<const Var> codes, std::span<const Vector> masks);

// sum_i coeffs[i] * scalars[i] over 1x1 nodes.
Var weighted_sum(std::span<const Var> scalars, std::span<const double> coeffs);

// Non-recording counterparts used for inference and as building blocks.
Matrix fuse_codes(std::span<const Matrix> codes, std::span<const Vector> masks);
double laplacian_quadratic(const Matrix& h, const SparseMatrix& laplacian);

// Validates symmetry and zero row sums. Throws ContractError.
void check_laplacian(const SparseMatrix& laplacian);

}  // namespace cdimc
