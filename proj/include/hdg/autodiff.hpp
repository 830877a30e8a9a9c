#pragma once

// Reverse-mode differentiation over dense matrices.
//
// A DiffTensor is an immutable matrix value plus, when it requires a
// gradient, a handle into exactly one Tape. Primitives whose inputs are all
// constants return constants and record nothing, so the same expression code
// serves both inference and training. Tapes record in topological order by
// construction; backward() visits each recorded op once, newest first.
//
// A Tape must outlive every DiffTensor recorded on it. Graphs passed to
// spmm() must outlive the tape.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hdg/graph.hpp"
#include "hdg/matrix.hpp"

namespace hdg {

class Tape;

class DiffTensor {
 public:
  DiffTensor() = default;
  /// Constant (no gradient) tensor.
  explicit DiffTensor(Matrix value) : value_(std::make_shared<const Matrix>(std::move(value))) {}

  const Matrix& value() const { return *value_; }
  std::size_t rows() const { return value_->rows(); }
  std::size_t cols() const { return value_->cols(); }
  bool defined() const { return static_cast<bool>(value_); }

  bool requires_grad() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

  /// Same value, cut from the tape.
  DiffTensor detach() const {
    DiffTensor out;
    out.value_ = value_;
    return out;
  }

  /// Scalar value of a (1,1) tensor.
  double item() const;

 private:
  friend class Tape;
  std::shared_ptr<const Matrix> value_;
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Receives input gradients while a recorded op runs its backward rule.
class GradSink {
 public:
  explicit GradSink(std::vector<Matrix>& grads) : grads_(grads) {}
  static bool wants(const DiffTensor& t) { return t.requires_grad(); }
  void add(const DiffTensor& t, Matrix grad);

 private:
  std::vector<Matrix>& grads_;
};

using BackwardFn = std::function<void(const Matrix& grad_out, GradSink& sink)>;

/// Result of a backward pass: d(output)/d(tensor) for every tensor on the tape.
class Gradients {
 public:
  Gradients(const Tape* tape, std::vector<Matrix> grads) : tape_(tape), grads_(std::move(grads)) {}
  /// Zero matrix for constants, tensors from other tapes, and unreachable ones.
  Matrix of(const DiffTensor& t) const;

 private:
  const Tape* tape_;
  std::vector<Matrix> grads_;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf tensor that requires a gradient.
  DiffTensor variable(Matrix value);

  /// Appends an op. Inputs must already be on this tape (or be constants).
  DiffTensor record(Matrix value, BackwardFn backward, const char* name);

  /// Runs the reverse sweep from a (1,1) output. seed scales the output adjoint.
  /// A tape can be swept once; further sweeps or records throw TapeError.
  Gradients backward(const DiffTensor& output, double seed = 1.0);

  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

 private:
  struct Node {
    std::size_t rows = 0;
    std::size_t cols = 0;
    BackwardFn backward;  // empty for leaves
    const char* name = "";
  };
  std::vector<Node> nodes_;
  bool consumed_ = false;
};

/// The shared tape of `inputs`, or nullptr when all are constants.
/// Throws TapeError if inputs span two tapes.
Tape* common_tape(std::initializer_list<const DiffTensor*> inputs);

// Primitives. Each checks shapes (ShapeError) and rejects non-finite output
// (NumericalError naming the primitive).

DiffTensor matmul(const DiffTensor& a, const DiffTensor& b);
/// Â·x for the graph's normalized adjacency (symmetric, so Âᵀ = Â in backward).
DiffTensor spmm(const SparseGraph& graph, const DiffTensor& x);
DiffTensor add(const DiffTensor& a, const DiffTensor& b);
DiffTensor sub(const DiffTensor& a, const DiffTensor& b);
DiffTensor elementwise_mul(const DiffTensor& a, const DiffTensor& b);
DiffTensor scale(const DiffTensor& x, double s);
DiffTensor add_scalar(const DiffTensor& x, double s);
/// x + 1·biasᵀ, bias of shape (1, cols).
DiffTensor add_row_bias(const DiffTensor& x, const DiffTensor& bias);
/// x / s for a (1,1) tensor s.
DiffTensor divide_by(const DiffTensor& x, const DiffTensor& s);
DiffTensor tanh(const DiffTensor& x);
DiffTensor sigmoid(const DiffTensor& x);
DiffTensor transpose(const DiffTensor& x);
DiffTensor concat_cols(const DiffTensor& left, const DiffTensor& right);
DiffTensor slice_cols(const DiffTensor& x, std::size_t begin, std::size_t count);
std::pair<DiffTensor, DiffTensor> split_cols(const DiffTensor& x, std::size_t left_cols);
DiffTensor sum(const DiffTensor& x);
/// sqrt(Σ x_ij² + eps), a (1,1) tensor.
DiffTensor frobenius_smooth(const DiffTensor& x, double eps = 1e-12);
DiffTensor softmax_rows(const DiffTensor& x);

/// Mean over `rows` of −log probs[row, labels[row]].
DiffTensor mean_neg_log_likelihood(const DiffTensor& probs, std::span<const int> labels,
                                   std::span<const std::size_t> rows);
/// Mean binary cross-entropy of an (m,1) logit column against 0/1 targets.
DiffTensor bce_with_logits(const DiffTensor& logits, std::span<const double> targets);
/// (m,1) column of ‖z_u − z_v‖² for each pair.
DiffTensor pair_sq_distance(const DiffTensor& z, std::span<const Edge> pairs);

}  // namespace hdg
