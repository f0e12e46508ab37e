#include "cdimc/autodiff.hpp"

#include <cmath>

namespace cdimc {

const Matrix& Var::value() const {
  if (tape_ == nullptr) throw ContractError("Var: not attached to a tape");
  return tape_->value_of(id_);
}

const Matrix& Var::grad() const {
  if (tape_ == nullptr) throw ContractError("Var: not attached to a tape");
  return tape_->grad_of(id_);
}

std::size_t Tape::id_of(Var v) const {
  if (v.tape_ != this) throw ContractError("Var belongs to a different tape");
  return v.id_;
}

Var Tape::constant(Matrix value) {
  require_finite(value, "constant");
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(Parameter& p) {
  require_finite(p.value, "parameter");
  if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols())
    p.grad = Matrix::Zero(p.value.rows(), p.value.cols());
  // The node reads the parameter's storage directly; parameters must not be
  // updated while a tape that recorded them is still in use.
  Node node;
  node.param = &p;
  node.requires_grad = true;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::vector<std::size_t> inputs, BackwardFn backward,
                 const char* op_name) {
  if (!value.allFinite()) throw NumericError(std::string(op_name) + ": non-finite result");
  Node node;
  node.value = std::move(value);
  for (std::size_t in : inputs) node.requires_grad = node.requires_grad || nodes_[in].requires_grad;
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Tape::accumulate(std::size_t id, const Matrix& delta) {
  Node& node = nodes_[id];
  if (!node.requires_grad) return;
  if (node.grad.size() == 0)
    node.grad = delta;
  else
    node.grad += delta;
}

void Tape::backward(Var loss) {
  const std::size_t root = id_of(loss);
  if (value_of(root).rows() != 1 || value_of(root).cols() != 1)
    throw ContractError("backward: loss must be 1x1");
  for (Node& node : nodes_) node.grad.resize(0, 0);
  if (!nodes_[root].requires_grad) return;
  nodes_[root].grad = Matrix::Ones(1, 1);
  for (std::size_t id = root + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (node.grad.size() == 0) continue;
    if (node.param != nullptr)
      node.param->grad += node.grad;
    else if (node.backward)
      node.backward(*this, id);
  }
}

namespace {

Tape& tape_of(Var v) {
  if (v.tape() == nullptr) throw ContractError("Var: not attached to a tape");
  return *v.tape();
}

void check_mask(const Vector& mask, Index cols, const char* what) {
  if (mask.size() != cols)
    throw DimensionError(std::string(what) + ": mask length " + std::to_string(mask.size()) +
                         " vs " + std::to_string(cols) + " columns");
  for (Index i = 0; i < mask.size(); ++i)
    if (mask[i] != 0.0 && mask[i] != 1.0)
      throw ContractError(std::string(what) + ": mask entries must be 0 or 1");
}

}  // namespace

Var affine(Var x, Var weight, Var bias) {
  Tape& tape = tape_of(x);
  const std::size_t ix = tape.id_of(x), iw = tape.id_of(weight), ib = tape.id_of(bias);
  const Matrix& xv = tape.value_of(ix);
  const Matrix& wv = tape.value_of(iw);
  const Matrix& bv = tape.value_of(ib);
  if (wv.cols() != xv.rows() || bv.rows() != wv.rows() || bv.cols() != 1)
    throw DimensionError("affine: weight " + std::to_string(wv.rows()) + "x" +
                         std::to_string(wv.cols()) + ", input " + std::to_string(xv.rows()) +
                         "x" + std::to_string(xv.cols()) + ", bias " +
                         std::to_string(bv.rows()) + "x" + std::to_string(bv.cols()));
  Matrix out = wv * xv;
  out.colwise() += bv.col(0);
  return tape.record(
      std::move(out), {ix, iw, ib},
      [ix, iw, ib](Tape& t, std::size_t self) {
        const Matrix& g = t.grad_of(self);
        if (t.needs_grad(iw)) t.accumulate(iw, g * t.value_of(ix).transpose());
        if (t.needs_grad(ib)) t.accumulate(ib, g.rowwise().sum());
        if (t.needs_grad(ix)) t.accumulate(ix, t.value_of(iw).transpose() * g);
      },
      "affine");
}

Var relu(Var x) {
  Tape& tape = tape_of(x);
  const std::size_t ix = tape.id_of(x);
  Matrix out = tape.value_of(ix).cwiseMax(0.0);
  return tape.record(
      std::move(out), {ix},
      [ix](Tape& t, std::size_t self) {
        const Matrix& in = t.value_of(ix);
        t.accumulate(ix, (in.array() > 0.0).select(t.grad_of(self), 0.0));
      },
      "relu");
}

Var sub(Var a, Var b) {
  Tape& tape = tape_of(a);
  const std::size_t ia = tape.id_of(a), ib = tape.id_of(b);
  require_same_shape(tape.value_of(ia), tape.value_of(ib), "sub");
  Matrix out = tape.value_of(ia) - tape.value_of(ib);
  return tape.record(
      std::move(out), {ia, ib},
      [ia, ib](Tape& t, std::size_t self) {
        if (t.needs_grad(ia)) t.accumulate(ia, t.grad_of(self));
        if (t.needs_grad(ib)) t.accumulate(ib, -t.grad_of(self));
      },
      "sub");
}

Var masked_frobenius(Var x, const Vector& column_mask) {
  Tape& tape = tape_of(x);
  const std::size_t ix = tape.id_of(x);
  const Matrix& xv = tape.value_of(ix);
  check_mask(column_mask, xv.cols(), "masked_frobenius");
  Matrix masked = xv * column_mask.asDiagonal();
  Matrix out(1, 1);
  out(0, 0) = masked.squaredNorm();
  return tape.record(
      std::move(out), {ix},
      [ix, masked = std::move(masked)](Tape& t, std::size_t self) {
        // mask is 0/1, so mask^2 == mask and the masked residual carries it.
        t.accumulate(ix, (2.0 * t.grad_of(self)(0, 0)) * masked);
      },
      "masked_frobenius");
}

void check_laplacian(const SparseMatrix& laplacian) {
  if (laplacian.rows() != laplacian.cols()) throw ContractError("laplacian: not square");
  Vector row_sums = Vector::Zero(laplacian.rows());
  double scale = 0.0;
  for (Index c = 0; c < laplacian.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(laplacian, c); it; ++it) {
      row_sums[it.row()] += it.value();
      scale = std::max(scale, std::abs(it.value()));
      if (it.row() != it.col() && laplacian.coeff(it.col(), it.row()) != it.value())
        throw ContractError("laplacian: not symmetric");
    }
  }
  if (row_sums.size() > 0 && row_sums.cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, scale))
    throw ContractError("laplacian: rows do not sum to zero");
}

double laplacian_quadratic(const Matrix& h, const SparseMatrix& laplacian) {
  if (h.cols() != laplacian.rows())
    throw DimensionError("laplacian_trace: " + std::to_string(h.cols()) + " columns vs " +
                         std::to_string(laplacian.rows()) + "-node Laplacian");
  Matrix hl = h * laplacian;
  return hl.cwiseProduct(h).sum();
}

Var laplacian_trace(Var h, const SparseMatrix& laplacian) {
  Tape& tape = tape_of(h);
  const std::size_t ih = tape.id_of(h);
  check_laplacian(laplacian);
  Matrix out(1, 1);
  out(0, 0) = laplacian_quadratic(tape.value_of(ih), laplacian);
  return tape.record(
      std::move(out), {ih},
      [ih, laplacian](Tape& t, std::size_t self) {
        const Matrix& hv = t.value_of(ih);
        Matrix g = hv * laplacian + hv * SparseMatrix(laplacian.transpose());
        t.accumulate(ih, t.grad_of(self)(0, 0) * g);
      },
      "laplacian_trace");
}

namespace {

Vector fuse_denominators(std::span<const Vector> masks, Index cols) {
  Vector denom = Vector::Zero(cols);
  for (const Vector& m : masks) {
    check_mask(m, cols, "mean_fuse");
    denom += m;
  }
  for (Index i = 0; i < cols; ++i)
    if (denom[i] == 0.0)
      throw ContractError("mean_fuse: sample " + std::to_string(i) + " has no available view");
  return denom;
}

}  // namespace

Matrix fuse_codes(std::span<const Matrix> codes, std::span<const Vector> masks) {
  if (codes.empty() || codes.size() != masks.size())
    throw DimensionError("mean_fuse: need one mask per view code");
  const Index rows = codes[0].rows(), cols = codes[0].cols();
  for (const Matrix& c : codes) require_same_shape(c, codes[0], "mean_fuse");
  Vector inv = fuse_denominators(masks, cols).cwiseInverse();
  Matrix out = Matrix::Zero(rows, cols);
  for (std::size_t v = 0; v < codes.size(); ++v) {
    for (Index i = 0; i < cols; ++i)
      if (masks[v][i] != 0.0) out.col(i) += codes[v].col(i);
  }
  return out * inv.asDiagonal();
}

Var mean_fuse(std::span<const Var> codes, std::span<const Vector> masks) {
  if (codes.empty()) throw DimensionError("mean_fuse: no codes");
  Tape& tape = tape_of(codes[0]);
  std::vector<std::size_t> ids;
  std::vector<Matrix> values;
  ids.reserve(codes.size());
  values.reserve(codes.size());
  for (Var c : codes) {
    ids.push_back(tape.id_of(c));
    values.push_back(tape.value_of(ids.back()));
  }
  Matrix out = fuse_codes(values, masks);
  const Vector inv = fuse_denominators(masks, out.cols()).cwiseInverse();
  // Per-view column weights m_v[i] / sum_v m_v[i].
  std::vector<Vector> weights;
  weights.reserve(masks.size());
  for (const Vector& m : masks) weights.push_back(m.cwiseProduct(inv));
  std::vector<std::size_t> inputs = ids;
  return tape.record(
      std::move(out), std::move(inputs),
      [ids, weights = std::move(weights)](Tape& t, std::size_t self) {
        const Matrix& g = t.grad_of(self);
        for (std::size_t v = 0; v < ids.size(); ++v)
          if (t.needs_grad(ids[v])) t.accumulate(ids[v], g * weights[v].asDiagonal());
      },
      "mean_fuse");
}

Var weighted_sum(std::span<const Var> scalars, std::span<const double> coeffs) {
  if (scalars.empty() || scalars.size() != coeffs.size())
    throw DimensionError("weighted_sum: need one coefficient per term");
  Tape& tape = tape_of(scalars[0]);
  std::vector<std::size_t> ids;
  std::vector<double> cs(coeffs.begin(), coeffs.end());
  Matrix out = Matrix::Zero(1, 1);
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    ids.push_back(tape.id_of(scalars[i]));
    const Matrix& s = tape.value_of(ids.back());
    if (s.rows() != 1 || s.cols() != 1) throw DimensionError("weighted_sum: terms must be 1x1");
    out(0, 0) += cs[i] * s(0, 0);
  }
  std::vector<std::size_t> inputs = ids;
  return tape.record(
      std::move(out), std::move(inputs),
      [ids, cs](Tape& t, std::size_t self) {
        const double g = t.grad_of(self)(0, 0);
        for (std::size_t i = 0; i < ids.size(); ++i)
          if (t.needs_grad(ids[i])) t.accumulate(ids[i], Matrix::Constant(1, 1, cs[i] * g));
      },
      "weighted_sum");
}

}  // namespace cdimc
