#pragma once

// Reverse-mode differentiation over dense double matrices.
//
// A Tape records every operation applied to its Vars. Trainable state lives
// in Parameter objects outside the tape; Tape::param links a Parameter into
// the graph, and Tape::backward accumulates d(root)/d(parameter) into
// Parameter::grad. Gradients accumulate until the owner calls zero_grad.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cdcl/types.hpp"

namespace cdcl {

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

class Tape;

/// Handle to a node on a Tape. Cheap to copy.
class Var {
 public:
  Var() = default;

  [[nodiscard]] const Matrix& value() const;
  [[nodiscard]] Index rows() const { return value().rows(); }
  [[nodiscard]] Index cols() const { return value().cols(); }
  /// Value of a 1x1 node.
  [[nodiscard]] double scalar() const;
  [[nodiscard]] Tape* tape() const { return tape_; }
  [[nodiscard]] Index id() const { return id_; }
  [[nodiscard]] bool attached() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, Index id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  Index id_ = -1;
};

class Tape {
 public:
  /// Receives the gradient flowing into a node; adds into its parents.
  using BackwardFn = std::function<void(const Matrix& out_grad, Tape& tape)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var param(Parameter& parameter);

  /// Records a node computed from `parents`. `backward` may be empty when no
  /// parent needs a gradient.
  Var record(Matrix value, std::vector<Var> parents, BackwardFn backward);

  [[nodiscard]] const Matrix& value(Var v) const;
  [[nodiscard]] bool requires_grad(Var v) const;
  /// Gradient of the last backward root with respect to `v`; zero-sized when
  /// `v` was not reached.
  [[nodiscard]] const Matrix& grad(Var v) const;

  /// Adds `g` into the gradient slot of `v`. Used by backward closures.
  void accumulate(Var v, const Matrix& g);
  template <typename Derived>
  void accumulate(Var v, const Eigen::MatrixBase<Derived>& g) {
    accumulate(v, Matrix(g));
  }

  /// Runs reverse accumulation from a 1x1 root. Throws std::invalid_argument
  /// for a non-scalar or detached root.
  void backward(Var root);

  [[nodiscard]] std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Parameter* parameter = nullptr;
    BackwardFn backward;
    bool requires_grad = false;
  };

  void check_owned(Var v) const;

  std::vector<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Operations. All inputs must live on the same tape.

Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Elementwise product.
Var mul(Var a, Var b);
/// Elementwise quotient; the divisor is floored at kNumericFloor in magnitude.
Var div(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var neg(Var a);
Var matmul(Var a, Var b);

Var relu(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
Var exp(Var a);
/// log(max(x, floor)).
Var log(Var a);
/// sqrt(max(x, floor)).
Var sqrt(Var a);
Var square(Var a);
/// max(x, lo); gradient passes only where x > lo.
Var clamp_min(Var a, double lo);

/// Sum of all entries, 1x1.
Var sum(Var a);
/// Mean of all entries, 1x1.
Var mean(Var a);
/// Euclidean norm of all entries, 1x1 (argument of sqrt floored).
Var l2_norm(Var a);

/// r x n -> r x 1 mean over columns.
Var row_mean(Var a);
/// r x n -> 1 x n sum over rows.
Var col_sum(Var a);
/// Column-wise Euclidean norms, 1 x n.
Var col_norm(Var a);

/// r x n (op) r x 1 broadcast along columns.
Var add_colwise(Var a, Var col);
Var sub_colwise(Var a, Var col);
Var mul_colwise(Var a, Var col);
Var div_colwise(Var a, Var col);

/// Stacks inputs vertically; all must have the same column count.
Var concat_rows(std::span<const Var> parts);
/// Selects columns `index[j]` of `a` into column j of the result.
Var gather_cols(Var a, std::vector<Index> index);
/// Contiguous column block.
Var slice_cols(Var a, Index start, Index count);

/// Causal dilated 1-D convolution applied independently to consecutive
/// column segments of `input` (channels_in x segments*segment_length).
///
/// `kernel` is channels_out x (channels_in * k): entry (o, i*k + j) holds tap j
/// of input channel i, which is the row-major layout of an
/// [channels_out][channels_in][k] tensor. Tap k-1 multiplies the current tick:
///   out(o, t) = sum_i sum_j W(o, i, j) * x(i, t - (k-1-j)*dilation).
/// With left_pad the output keeps segment_length (zeros on the left);
/// otherwise each segment shrinks by (k-1)*dilation.
Var conv1d_causal(Var input, Var kernel, Index k, Index dilation, Index segment_length,
                  bool left_pad);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator-(Var a) { return neg(a); }

/// Output length of conv1d_causal for one segment; throws if it would be empty.
Index conv1d_output_length(Index length, Index k, Index dilation, bool left_pad);

}  // namespace cdcl
