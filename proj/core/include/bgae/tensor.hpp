#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "bgae/graph.hpp"

namespace bgae {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Tensor {
 public:
  Tensor() = default;

  const Matrix& value() const;
  /// Gradient after Tape::backward. Zero-filled for leaves the loss does not reach.
  const Matrix& grad() const;
  bool requires_grad() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  /// The single entry of a 1x1 tensor.
  double item() const;

  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Tensor(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

#ifdef NDEBUG
inline constexpr bool kCheckFiniteByDefault = false;
#else
inline constexpr bool kCheckFiniteByDefault = true;
#endif

/// Records operations in creation order; backward walks them in reverse, so
/// every node is visited after all of its consumers.
class Tape {
 public:
  using BackwardFn = std::function<void(const Matrix& out_grad)>;

  explicit Tape(bool check_finite = kCheckFiniteByDefault) : check_finite_(check_finite) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Trainable leaf.
  Tensor variable(Matrix value);
  Tensor constant(Matrix value);

  /// Fills gradients of every requires_grad node w.r.t. the scalar `loss`.
  /// A second call without reset_gradients() is an error.
  void backward(const Tensor& loss);
  void reset_gradients();

  std::size_t size() const noexcept { return nodes_.size(); }
  bool check_finite() const noexcept { return check_finite_; }

  /// Used by operation implementations.
  Tensor record(std::string_view op, Matrix value, std::initializer_list<Tensor> inputs,
                BackwardFn backward);
  Tensor record(std::string_view op, Matrix value, std::span<const Tensor> inputs,
                BackwardFn backward);
  void accumulate(const Tensor& target, const Matrix& grad);

 private:
  friend class Tensor;

  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool has_grad = false;
    BackwardFn backward;
    std::string_view op;
  };

  Node& node(const Tensor& t);
  const Node& node(const Tensor& t) const;

  std::deque<Node> nodes_;
  bool check_finite_;
  bool backward_done_ = false;
};

using SparseOperand = std::shared_ptr<const SparseMatrix>;

Tensor matmul(const Tensor& a, const Tensor& b);
/// a^T b without materializing the transpose.
Tensor matmul_tn(const Tensor& a, const Tensor& b);
/// Constant sparse matrix times dense tensor; the tape keeps `s` alive.
Tensor sparse_matmul(SparseOperand s, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scalar_mul(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);

Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
/// Requires strictly positive input.
Tensor log(const Tensor& a);
Tensor abs(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double slope = 0.01);
/// max(a, lo); gradient passes only where a >= lo.
Tensor clamp_min(const Tensor& a, double lo);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor transpose(const Tensor& a);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor gather_rows(const Tensor& a, std::span<const Index> rows);
/// P x 1 column of <a_u, a_v> for each pair.
Tensor row_dot(const Tensor& a, std::span<const Edge> pairs);

/// Subtracts each column's mean.
Tensor center_columns(const Tensor& a);
/// Row i of `a` scaled by weights(i); `weights` is N x 1.
Tensor scale_rows(const Tensor& a, const Tensor& weights);

/// mu + exp(0.5 log_var) * eps with eps ~ N(0, I) drawn from `rng`.
Tensor reparameterize(const Tensor& mu, const Tensor& log_var, std::mt19937_64& rng);
/// Same with caller-supplied noise.
Tensor reparameterize(const Tensor& mu, const Tensor& log_var, const Matrix& noise);

}  // namespace bgae
