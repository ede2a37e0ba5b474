#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "acm/core/tensor.hpp"

namespace acm::core {

/// Every operation the tape knows how to record and differentiate.
enum class OpKind : std::uint8_t {
  kConstant,
  kParameter,
  kMatMul,
  kMatMulNT,
  kAdd,
  kAddBias,
  kMul,
  kScale,
  kAddConst,
  kSoftmax,
  kCausalSoftmax,
  kLogSoftmax,
  kCrossEntropy,
  kLayerNorm,
  kGelu,
  kEmbedding,
  kSegmentMean,
  kCumulativeMean,
  kMeanRows,
  kSliceCols,
  kConcatCols,
  kSum,
  kSquare,
};

const char* op_name(OpKind op);

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid as long as the
/// tape is alive and has not been cleared.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::uint32_t id() const { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  double item() const { return value().item(); }
  /// Gradient accumulated by the last Tape::backward; empty if none reached it.
  std::span<const double> grad() const;

 private:
  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

/// Reverse-mode tape. Operations append nodes in evaluation order; backward()
/// replays them in reverse. Parameter leaves reference caller-owned tensors
/// and accumulate into their gradient buffers.
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::uint32_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Leaf bound to `param`; gradients land in param.grad() after backward.
  Var parameter(Tensor& param);

  /// Records an op result. `backward` is dropped when no input needs a gradient.
  Var record(OpKind op, Tensor value, bool requires_grad, Backward backward);

  /// Backpropagates from a one-element root. Throws if the root is not scalar.
  void backward(Var root);
  void clear();
  std::size_t size() const { return nodes_.size(); }

  const Tensor& value(std::uint32_t id) const;
  bool requires_grad(std::uint32_t id) const { return nodes_[id].requires_grad; }
  OpKind op(std::uint32_t id) const { return nodes_[id].op; }
  /// Mutable gradient of a node, allocated on first use.
  std::span<double> grad(std::uint32_t id);
  std::span<const double> grad_if_any(std::uint32_t id) const;

 private:
  struct Node {
    OpKind op = OpKind::kConstant;
    Tensor value;
    Tensor* param = nullptr;
    std::vector<double> grad;
    Backward backward;
    bool requires_grad = false;
  };

  std::deque<Node> nodes_;
};

// ---- operations -----------------------------------------------------------
// All ops take and return Vars living on the same tape. Matrices are rank-2;
// "rows" ops treat the last axis as the row.

Var matmul(Var a, Var b);
/// a · bᵀ
Var matmul_nt(Var a, Var b);
Var add(Var a, Var b);
/// x[m×n] + bias[n] broadcast over rows.
Var add_bias(Var x, Var bias);
Var mul(Var a, Var b);
Var scale(Var x, double factor);
/// x + c for a constant c of the same shape (no gradient into c).
Var add_const(Var x, const Tensor& c);
Var square(Var x);

/// Softmax along `axis` (negative counts from the end).
Var softmax(Var x, int axis = -1);
/// Row softmax of a square score matrix restricted to j <= i.
Var causal_softmax(Var x);
Var log_softmax(Var x);
/// Mean over rows of −log softmax(logits_r)[targets_r]. A rank-1 logits
/// tensor is a single row.
Var cross_entropy(Var logits, std::span<const std::size_t> targets);

Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
Var gelu(Var x);

/// Rows of `table` selected by ids.
Var embedding(Var table, std::span<const std::size_t> ids);
/// Row s = mean of table[ids[k]] for k in [spans[s].first, spans[s].second).
Var segment_mean(Var table, std::span<const std::size_t> ids,
                 std::span<const std::pair<std::size_t, std::size_t>> spans);
/// Row k = mean of rows 0..k.
Var cumulative_mean(Var x);
/// 1×n mean over rows.
Var mean_rows(Var x);
Var slice_cols(Var x, std::size_t begin, std::size_t count);
Var concat_cols(std::span<const Var> parts);
Var sum(Var x);

}  // namespace acm::core
