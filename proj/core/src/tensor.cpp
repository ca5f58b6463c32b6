#include "bgae/tensor.hpp"

#include <string>

#include "bgae/errors.hpp"

namespace bgae {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
namespace {

std::string shape_of(const Matrix& m) {
  return "(" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")";
}

void require_same_shape(std::string_view op, const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_of(a.value()) + " vs " +
                     shape_of(b.value()));
  }
}

Tape& common_tape(const Tensor& a, const Tensor& b) {
  if (&a.tape() != &b.tape()) throw Error("tensors belong to different tapes");
  return a.tape();
}

}  // namespace

const Matrix& Tensor::value() const { return tape_->node(*this).value; }

const Matrix& Tensor::grad() const {
  auto& n = tape_->node(*this);
  if (!n.has_grad) {
    n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    n.has_grad = true;
  }
  return n.grad;
}

bool Tensor::requires_grad() const { return tape_->node(*this).requires_grad; }

double Tensor::item() const {
  const auto& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw ShapeError("item() on non-scalar tensor " + shape_of(v));
  return v(0, 0);
}

Tape::Node& Tape::node(const Tensor& t) {
  if (t.tape_ != this || t.id_ >= nodes_.size()) throw Error("tensor does not belong to this tape");
  return nodes_[t.id_];
}

const Tape::Node& Tape::node(const Tensor& t) const {
  if (t.tape_ != this || t.id_ >= nodes_.size()) throw Error("tensor does not belong to this tape");
  return nodes_[t.id_];
}

Tensor Tape::variable(Matrix value) {
  if (check_finite_ && !value.allFinite()) throw NumericError("variable: non-finite initial value");
  nodes_.push_back(Node{std::move(value), {}, true, false, {}, "variable"});
  return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, false, false, {}, "constant"});
  return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::record(std::string_view op, Matrix value, std::initializer_list<Tensor> inputs,
                    BackwardFn backward) {
  return record(op, std::move(value), std::span<const Tensor>(inputs.begin(), inputs.size()),
                std::move(backward));
}

Tensor Tape::record(std::string_view op, Matrix value, std::span<const Tensor> inputs,
                    BackwardFn backward) {
  if (check_finite_ && !value.allFinite()) {
    throw NumericError(std::string(op) + " produced non-finite values");
  }
  bool needs_grad = false;
  for (const auto& in : inputs) needs_grad = needs_grad || node(in).requires_grad;
  Node n{std::move(value), {}, needs_grad, false, {}, op};
  if (needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Tensor(this, nodes_.size() - 1);
}

void Tape::accumulate(const Tensor& target, const Matrix& grad) {
  auto& n = node(target);
  if (!n.requires_grad) return;
  if (n.has_grad) {
    n.grad += grad;
  } else {
    n.grad = grad;
    n.has_grad = true;
  }
}

void Tape::backward(const Tensor& loss) {
  auto& root = node(loss);
  if (root.value.rows() != 1 || root.value.cols() != 1) {
    throw ShapeError("backward requires a scalar loss, got " + shape_of(root.value));
  }
  if (backward_done_) throw Error("backward called twice without reset_gradients()");
  if (!root.requires_grad) throw Error("loss does not depend on any variable");
  backward_done_ = true;

  root.grad = Matrix::Ones(1, 1);
  root.has_grad = true;
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    auto& n = nodes_[id];
    if (n.has_grad && n.backward) n.backward(n.grad);
  }
}

void Tape::reset_gradients() {
  for (auto& n : nodes_) {
    n.grad.resize(0, 0);
    n.has_grad = false;
  }
  backward_done_ = false;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  auto& tape = common_tape(a, b);
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: shape mismatch " + shape_of(a.value()) + " vs " + shape_of(b.value()));
  }
  Matrix out = a.value() * b.value();
  return tape.record("matmul", std::move(out), {a, b}, [a, b, &tape](const Matrix& g) {
    if (a.requires_grad()) tape.accumulate(a, g * b.value().transpose());
    if (b.requires_grad()) tape.accumulate(b, a.value().transpose() * g);
  });
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  auto& tape = common_tape(a, b);
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: shape mismatch " + shape_of(a.value()) + " vs " + shape_of(b.value()));
  }
  Matrix out = a.value().transpose() * b.value();
  return tape.record("matmul_tn", std::move(out), {a, b}, [a, b, &tape](const Matrix& g) {
    if (a.requires_grad()) tape.accumulate(a, b.value() * g.transpose());
    if (b.requires_grad()) tape.accumulate(b, a.value() * g);
  });
}

Tensor sparse_matmul(SparseOperand s, const Tensor& b) {
  auto& tape = b.tape();
  if (!s || s->cols() != b.rows()) {
    throw ShapeError("sparse_matmul: shape mismatch (" + std::to_string(s ? s->rows() : 0) + "x" +
                     std::to_string(s ? s->cols() : 0) + ") vs " + shape_of(b.value()));
  }
  // Row-major dense operands let the sparse kernel stream whole rows.
  Matrix out = RowMatrix((*s) * RowMatrix(b.value()));
  return tape.record("sparse_matmul", std::move(out), {b}, [s, b, &tape](const Matrix& g) {
    // S^T g as a scatter over the rows of S.
    const RowMatrix gr = g;
    RowMatrix gb = RowMatrix::Zero(s->cols(), gr.cols());
    for (Index i = 0; i < s->outerSize(); ++i) {
      for (SparseMatrix::InnerIterator it(*s, i); it; ++it) gb.row(it.col()) += it.value() * gr.row(i);
    }
    tape.accumulate(b, Matrix(gb));
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  auto& tape = common_tape(a, b);
  require_same_shape("add", a, b);
  return tape.record("add", a.value() + b.value(), {a, b}, [a, b, &tape](const Matrix& g) {
    tape.accumulate(a, g);
    tape.accumulate(b, g);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  auto& tape = common_tape(a, b);
  require_same_shape("sub", a, b);
  return tape.record("sub", a.value() - b.value(), {a, b}, [a, b, &tape](const Matrix& g) {
    tape.accumulate(a, g);
    if (b.requires_grad()) tape.accumulate(b, -g);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  auto& tape = common_tape(a, b);
  require_same_shape("mul", a, b);
  Matrix out = a.value().cwiseProduct(b.value());
  return tape.record("mul", std::move(out), {a, b}, [a, b, &tape](const Matrix& g) {
    if (a.requires_grad()) tape.accumulate(a, g.cwiseProduct(b.value()));
    if (b.requires_grad()) tape.accumulate(b, g.cwiseProduct(a.value()));
  });
}

Tensor scalar_mul(const Tensor& a, double s) {
  auto& tape = a.tape();
  return tape.record("scalar_mul", a.value() * s, {a},
                     [a, s, &tape](const Matrix& g) { tape.accumulate(a, g * s); });
}

Tensor add_scalar(const Tensor& a, double s) {
  auto& tape = a.tape();
  Matrix out = a.value().array() + s;
  return tape.record("add_scalar", std::move(out), {a},
                     [a, &tape](const Matrix& g) { tape.accumulate(a, g); });
}

Tensor sigmoid(const Tensor& a) {
  auto& tape = a.tape();
  Matrix out = a.value().unaryExpr([](double x) {
    // Split by sign so exp never overflows.
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
  Matrix saved = out;
  return tape.record("sigmoid", std::move(out), {a}, [a, saved = std::move(saved), &tape](const Matrix& g) {
    tape.accumulate(a, g.cwiseProduct((saved.array() * (1.0 - saved.array())).matrix()));
  });
}

Tensor exp(const Tensor& a) {
  auto& tape = a.tape();
  Matrix out = a.value().array().exp();
  Matrix saved = out;
  return tape.record("exp", std::move(out), {a}, [a, saved = std::move(saved), &tape](const Matrix& g) {
    tape.accumulate(a, g.cwiseProduct(saved));
  });
}

Tensor log(const Tensor& a) {
  auto& tape = a.tape();
  if ((a.value().array() <= 0.0).any()) throw NumericError("log: input must be strictly positive");
  Matrix out = a.value().array().log();
  return tape.record("log", std::move(out), {a}, [a, &tape](const Matrix& g) {
    tape.accumulate(a, g.cwiseQuotient(a.value()));
  });
}

Tensor abs(const Tensor& a) {
  auto& tape = a.tape();
  return tape.record("abs", a.value().cwiseAbs(), {a}, [a, &tape](const Matrix& g) {
    Matrix sign = a.value().unaryExpr([](double x) { return double((x > 0) - (x < 0)); });
    tape.accumulate(a, g.cwiseProduct(sign));
  });
}

Tensor leaky_relu(const Tensor& a, double slope) {
  auto& tape = a.tape();
  Matrix out = a.value().unaryExpr([slope](double x) { return x > 0 ? x : slope * x; });
  return tape.record("leaky_relu", std::move(out), {a}, [a, slope, &tape](const Matrix& g) {
    Matrix d = a.value().unaryExpr([slope](double x) { return x > 0 ? 1.0 : slope; });
    tape.accumulate(a, g.cwiseProduct(d));
  });
}

Tensor clamp_min(const Tensor& a, double lo) {
  auto& tape = a.tape();
  Matrix out = a.value().cwiseMax(lo);
  return tape.record("clamp_min", std::move(out), {a}, [a, lo, &tape](const Matrix& g) {
    Matrix pass = (a.value().array() >= lo).cast<double>();
    tape.accumulate(a, g.cwiseProduct(pass));
  });
}

Tensor sum(const Tensor& a) {
  auto& tape = a.tape();
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return tape.record("sum", std::move(out), {a}, [a, &tape](const Matrix& g) {
    tape.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
  });
}

Tensor mean(const Tensor& a) {
  auto& tape = a.tape();
  const auto count = static_cast<double>(a.value().size());
  if (count == 0) throw ShapeError("mean of empty tensor");
  Matrix out(1, 1);
  out(0, 0) = a.value().sum() / count;
  return tape.record("mean", std::move(out), {a}, [a, count, &tape](const Matrix& g) {
    tape.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0) / count));
  });
}

Tensor transpose(const Tensor& a) {
  auto& tape = a.tape();
  Matrix out = a.value().transpose();
  return tape.record("transpose", std::move(out), {a},
                     [a, &tape](const Matrix& g) { tape.accumulate(a, g.transpose()); });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  auto& tape = parts.front().tape();
  const Index cols = parts.front().cols();
  Index rows = 0;
  for (const auto& p : parts) {
    if (&p.tape() != &tape) throw Error("tensors belong to different tapes");
    if (p.cols() != cols) {
      throw ShapeError("concat_rows: column mismatch " + shape_of(parts.front().value()) + " vs " +
                       shape_of(p.value()));
    }
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Index offset = 0;
  for (const auto& p : parts) {
    out.middleRows(offset, p.rows()) = p.value();
    offset += p.rows();
  }
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  return tape.record("concat_rows", std::move(out), parts, [inputs, &tape](const Matrix& g) {
    Index at = 0;
    for (const auto& p : inputs) {
      if (p.requires_grad()) tape.accumulate(p, g.middleRows(at, p.rows()));
      at += p.rows();
    }
  });
}

Tensor gather_rows(const Tensor& a, std::span<const Index> rows) {
  auto& tape = a.tape();
  Matrix out(static_cast<Index>(rows.size()), a.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] < 0 || rows[k] >= a.rows()) throw ShapeError("gather_rows: index out of range");
    out.row(static_cast<Index>(k)) = a.value().row(rows[k]);
  }
  std::vector<Index> idx(rows.begin(), rows.end());
  return tape.record("gather_rows", std::move(out), {a}, [a, idx, &tape](const Matrix& g) {
    Matrix ga = Matrix::Zero(a.rows(), a.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) ga.row(idx[k]) += g.row(static_cast<Index>(k));
    tape.accumulate(a, ga);
  });
}

Tensor row_dot(const Tensor& a, std::span<const Edge> pairs) {
  auto& tape = a.tape();
  const RowMatrix z = a.value();
  Matrix out(static_cast<Index>(pairs.size()), 1);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto& p = pairs[k];
    if (p.u < 0 || p.v < 0 || p.u >= z.rows() || p.v >= z.rows()) {
      throw ShapeError("row_dot: pair index out of range");
    }
    out(static_cast<Index>(k), 0) = z.row(p.u).dot(z.row(p.v));
  }
  std::vector<Edge> saved(pairs.begin(), pairs.end());
  return tape.record("row_dot", std::move(out), {a}, [a, saved, &tape](const Matrix& g) {
    const RowMatrix zv = a.value();
    RowMatrix ga = RowMatrix::Zero(zv.rows(), zv.cols());
    for (std::size_t k = 0; k < saved.size(); ++k) {
      const double gk = g(static_cast<Index>(k), 0);
      ga.row(saved[k].u) += gk * zv.row(saved[k].v);
      ga.row(saved[k].v) += gk * zv.row(saved[k].u);
    }
    tape.accumulate(a, Matrix(ga));
  });
}

Tensor center_columns(const Tensor& a) {
  auto& tape = a.tape();
  if (a.rows() == 0) throw ShapeError("center_columns of empty tensor");
  Matrix out = a.value().rowwise() - a.value().colwise().mean();
  return tape.record("center_columns", std::move(out), {a}, [a, &tape](const Matrix& g) {
    Matrix ga = g.rowwise() - g.colwise().mean();
    tape.accumulate(a, ga);
  });
}

Tensor scale_rows(const Tensor& a, const Tensor& weights) {
  auto& tape = common_tape(a, weights);
  if (weights.cols() != 1 || weights.rows() != a.rows()) {
    throw ShapeError("scale_rows: weights " + shape_of(weights.value()) + " do not match " +
                     shape_of(a.value()));
  }
  Matrix out = weights.value().col(0).asDiagonal() * a.value();
  return tape.record("scale_rows", std::move(out), {a, weights}, [a, weights, &tape](const Matrix& g) {
    if (a.requires_grad()) tape.accumulate(a, weights.value().col(0).asDiagonal() * g);
    if (weights.requires_grad()) {
      Matrix gw = g.cwiseProduct(a.value()).rowwise().sum();
      tape.accumulate(weights, gw);
    }
  });
}

Tensor reparameterize(const Tensor& mu, const Tensor& log_var, const Matrix& noise) {
  require_same_shape("reparameterize", mu, log_var);
  if (noise.rows() != mu.rows() || noise.cols() != mu.cols()) {
    throw ShapeError("reparameterize: noise shape " + shape_of(noise) + " vs " + shape_of(mu.value()));
  }
  auto& tape = common_tape(mu, log_var);
  const Tensor std_dev = exp(scalar_mul(log_var, 0.5));
  return add(mu, mul(std_dev, tape.constant(noise)));
}

Tensor reparameterize(const Tensor& mu, const Tensor& log_var, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix noise(mu.rows(), mu.cols());
  // Column-major fill order is part of the reproducibility contract.
  for (Index j = 0; j < noise.cols(); ++j) {
    for (Index i = 0; i < noise.rows(); ++i) noise(i, j) = normal(rng);
  }
  return reparameterize(mu, log_var, noise);
}

}  // namespace bgae
