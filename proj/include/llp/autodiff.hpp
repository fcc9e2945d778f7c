#pragma once

// Define-by-run reverse-mode differentiation over llp::Tensor.
//
// A Tape owns every value produced during one forward pass. Operations append
// nodes whose parents already exist, so node order is a topological order and
// backward() is a single reverse sweep.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "llp/kernels.hpp"
#include "llp/random.hpp"
#include "llp/tensor.hpp"

namespace llp {

class Tape;

/// Handle to a value recorded on a tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;
};

class Tape {
 public:
  /// Backward closure: receives the node's forward value and accumulated
  /// output gradient, and pushes contributions into its parents through
  /// Tape::grad_buffer().
  using BackwardFn = std::function<void(Tape&, const Tensor& out_value, const Tensor& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Differentiable input (a parameter or anything whose gradient is wanted).
  Var leaf(Tensor value);
  /// Non-differentiable input.
  Var constant(Tensor value);

  /// Appends an operation result. parents must belong to this tape.
  /// Throws NumericError if value contains NaN/Inf.
  Var record(Tensor value, std::span<const Var> parents, BackwardFn backward);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const;

  /// Gradient of the last backward root w.r.t. v; zeros if v did not
  /// influence the root.
  Tensor grad(Var v) const;

  /// Mutable gradient accumulator for v, allocated (zeroed) on first use.
  Tensor& grad_buffer(Var v);

  /// Seeds d root / d root = 1 and propagates to every node.
  /// Throws UsageError unless root is 1x1.
  void backward(Var root);

  std::size_t size() const noexcept { return nodes_.size(); }
  void clear();

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    BackwardFn backward;
  };

  void check_owned(Var v) const;

  std::vector<Node> nodes_;
};

namespace ad {

// Primitive suite. Shape errors throw DimensionError, bad hyper-parameters
// throw ParameterError.

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// a (m x n) + row vector bias (1 x n) broadcast over rows.
Var add_bias(Var a, Var bias);
/// Hadamard product.
Var mul(Var a, Var b);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);
Var sigmoid(Var a);
Var relu(Var a);
/// Natural log; throws ParameterError on non-positive input.
Var log(Var a);
Var exp(Var a);
/// Elementwise clamp to [lo, hi]; gradient passes only strictly inside.
Var clamp(Var a, double lo, double hi);
/// Row-wise softmax(a / temperature).
Var softmax(Var a, double temperature);
/// Row-wise log softmax(a / temperature).
Var log_softmax(Var a, double temperature);
/// Log-softmax of a column vector over contiguous segments
/// [offsets[s], offsets[s+1]).
Var segment_log_softmax(Var a, std::span<const std::size_t> offsets, double temperature);
/// axis 0 -> 1 x cols, axis 1 -> rows x 1.
Var mean(Var a, int axis);
/// Sum of all entries -> 1x1.
Var sum(Var a);
/// Mean of all entries -> 1x1.
Var mean_all(Var a);
/// axis 0 stacks rows, axis 1 stacks columns.
Var concat(Var a, Var b, int axis);
/// Inverted dropout: zero each entry with probability rate, scale the rest
/// by 1/(1-rate). rate == 0 is the identity.
Var dropout(Var a, double rate, Rng& rng);
/// out[r] = a[index[r]].
Var gather_rows(Var a, std::span<const std::uint32_t> index);
/// Mean of neighbor rows over a symmetric graph; isolated rows are zero.
Var mean_neighbors(Var a, const kernels::CsrView& graph);
/// Rows h[u[r]] (.) h[v[r]].
Var pair_hadamard(Var h, std::span<const std::uint32_t> u, std::span<const std::uint32_t> v);

}  // namespace ad

/// Adam with bias correction.
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  /// Updates params in place. params[i] and grads[i] must have equal shape,
  /// and the parameter list must keep the same layout across calls.
  void step(std::span<Tensor* const> params, std::span<const Tensor* const> grads);

  double lr() const noexcept { return lr_; }
  std::int64_t steps() const noexcept { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

}  // namespace llp
