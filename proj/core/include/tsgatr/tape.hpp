#pragma once

#include <functional>
#include <initializer_list>
#include <vector>

#include "tsgatr/common.hpp"

// Minimal dynamic reverse-mode autodiff. A Tape records every operation of
// one forward pass in creation order; backward() walks it in reverse.
//
// Tapes are not thread-safe and are meant to be owned by a single worker for
// a single example.
namespace tsgatr::ad {

class Tape;

/// Handle to one recorded value. Cheap to copy; only valid while its tape
/// is alive.
class Var {
 public:
  Var() = default;

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  /// Value of a 1x1 node.
  double scalar() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Scratch gradients for one backward sweep. Entries are materialized as
/// zeros of the node's shape on first access.
class GradientBuffer {
 public:
  Matrix& operator[](Var v);
  /// False for nodes that do not depend on any variable; their gradient
  /// does not need to be formed.
  bool wants(Var v) const;

 private:
  friend class Tape;
  explicit GradientBuffer(const Tape& tape);

  const Tape& tape_;
  std::vector<Matrix> grads_;
  std::vector<bool> live_;
};

/// A backward rule: receives the node's own value and d(root)/d(value) and
/// adds into the parents' entries of the buffer.
using BackwardFn = std::function<void(const Matrix& out, const Matrix& dout, GradientBuffer& grads)>;

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that never receives a gradient.
  Var constant(Matrix value);
  /// Leaf whose gradient is accumulated by backward().
  Var variable(Matrix value);
  /// Interior node. `backward` is dropped when no parent requires a gradient.
  Var record(Matrix value, std::initializer_list<Var> parents, BackwardFn backward);

  const Matrix& value(Var v) const { return nodes_[v.id()].value; }
  bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }

  /// Accumulated gradient; zeros when nothing has flowed into the node yet.
  Matrix gradient(Var v) const;

  /// Backpropagates from a 1x1 root. Gradients accumulate: a second call
  /// without zero_grad() doubles every gradient.
  void backward(Var root);
  /// Backpropagates an arbitrary upstream gradient `seed` (same shape as
  /// root), e.g. one handed over from another tape.
  void backward(Var root, const Matrix& seed);
  void zero_grad();

  std::size_t size() const { return nodes_.size(); }

 private:
  friend class GradientBuffer;

  struct Node {
    Matrix value;
    Matrix grad;
    BackwardFn backward;
    bool requires_grad = false;
  };

  Var push(Node node);
  void check_owned(Var v) const;

  std::vector<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Primitive set. All operands must come from the same tape.

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Elementwise (Hadamard) product.
Var mul(Var a, Var b);
/// Adds a 1 x c row vector to every row of an r x c matrix.
Var add_row(Var a, Var row);
Var scale(Var a, double factor);
/// factor * a + offset, elementwise.
Var affine(Var a, double factor, double offset);
Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);
Var concat_cols(Var a, Var b);
Var transpose(Var a);
Var sum(Var a);
Var mean(Var a);

/// Row-wise softmax restricted to the nonzero entries of `structure`
/// (max-subtracted). Entries outside the structure are exactly 0.
Var masked_softmax(Var logits, const Matrix& structure);

inline constexpr double kLayerNormEpsilon = 1e-5;

/// Per-row standardization (population variance, eps inside the sqrt)
/// followed by gain/bias, both 1 x d.
Var layer_norm(Var x, Var gain, Var bias);

/// Non-overlapping windows of 2 along rows; an odd tail row passes through.
/// Ties go to the earlier row.
Var max_pool_stride2(Var x);
Var avg_pool_stride2(Var x);

struct GruWeights {
  Var w_update, u_update, b_update;
  Var w_reset, u_reset, b_reset;
  Var w_candidate, u_candidate, b_candidate;
};

/// Runs a GRU over the rows of `x` (L x d_in) starting from `h0` (1 x d)
/// and returns all hidden states (L x d):
///   z = sigmoid(x W_z + h U_z + b_z), r = sigmoid(x W_r + h U_r + b_r)
///   c = tanh(x W_c + (r * h) U_c + b_c), h' = (1 - z) * h + z * c
Var gru_sequence(Var x, const GruWeights& w, Var h0);

}  // namespace tsgatr::ad
