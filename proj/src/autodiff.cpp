#include "llp/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "llp/errors.hpp"

namespace llp {

namespace {

std::string shape_str(const Tensor& t) { return std::to_string(t.rows()) + "x" + std::to_string(t.cols()); }

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
  }
}

void require_same_tape(Var a, Var b) {
  if (a.tape != b.tape || a.tape == nullptr) throw UsageError("operands recorded on different tapes");
}

void require_temperature(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw ParameterError("temperature must be > 0");
}

}  // namespace

// ---------------------------------------------------------------------------
// Tape

Var Tape::leaf(Tensor value) {
  if (!value.all_finite()) throw NumericError("non-finite leaf value");
  nodes_.push_back(Node{std::move(value), Tensor(), false, true, nullptr});
  return Var{this, nodes_.size() - 1};
}

Var Tape::constant(Tensor value) {
  if (!value.all_finite()) throw NumericError("non-finite constant value");
  nodes_.push_back(Node{std::move(value), Tensor(), false, false, nullptr});
  return Var{this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::span<const Var> parents, BackwardFn backward) {
  bool needs = false;
  for (const Var& p : parents) {
    check_owned(p);
    needs = needs || nodes_[p.id].requires_grad;
  }
  if (!value.all_finite()) throw NumericError("forward pass produced NaN/Inf");
  nodes_.push_back(Node{std::move(value), Tensor(), false, needs, needs ? std::move(backward) : nullptr});
  return Var{this, nodes_.size() - 1};
}

void Tape::check_owned(Var v) const {
  if (v.tape != this || v.id >= nodes_.size()) throw UsageError("variable does not belong to this tape");
}

const Tensor& Tape::value(Var v) const {
  check_owned(v);
  return nodes_[v.id].value;
}

bool Tape::requires_grad(Var v) const {
  check_owned(v);
  return nodes_[v.id].requires_grad;
}

Tensor Tape::grad(Var v) const {
  check_owned(v);
  const Node& n = nodes_[v.id];
  if (n.has_grad) return n.grad;
  return Tensor(n.value.rows(), n.value.cols());
}

Tensor& Tape::grad_buffer(Var v) {
  check_owned(v);
  Node& n = nodes_[v.id];
  if (!n.has_grad) {
    n.grad = Tensor(n.value.rows(), n.value.cols());
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::backward(Var root) {
  check_owned(root);
  if (nodes_[root.id].value.size() != 1) {
    throw UsageError("backward() needs a scalar root, got " + shape_str(nodes_[root.id].value));
  }
  for (Node& n : nodes_) {
    n.grad = Tensor();
    n.has_grad = false;
  }
  grad_buffer(root)[0] = 1.0;
  for (std::size_t i = root.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.backward) continue;
    n.backward(*this, n.value, n.grad);
  }
}

void Tape::clear() { nodes_.clear(); }

// ---------------------------------------------------------------------------
// Primitives

namespace ad {

namespace {

Var record1(Var a, Tensor out, Tape::BackwardFn fn) {
  const Var parents[] = {a};
  return a.tape->record(std::move(out), parents, std::move(fn));
}

Var record2(Var a, Var b, Tensor out, Tape::BackwardFn fn) {
  require_same_tape(a, b);
  const Var parents[] = {a, b};
  return a.tape->record(std::move(out), parents, std::move(fn));
}

}  // namespace

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  const Tensor& A = a.tape->value(a);
  const Tensor& B = b.tape->value(b);
  if (A.cols() != B.rows()) throw DimensionError("matmul: " + shape_str(A) + " * " + shape_str(B));
  const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
  Tensor out(m, n);
  kernels::gemm_nn(A.data(), B.data(), out.data(), m, k, n, false);
  return record2(a, b, std::move(out), [a, b, m, k, n](Tape& t, const Tensor&, const Tensor& g) {
    if (t.requires_grad(a)) {
      const Tensor bt = t.value(b).transposed();
      kernels::gemm_nn(g.data(), bt.data(), t.grad_buffer(a).data(), m, n, k, true);
    }
    if (t.requires_grad(b)) {
      kernels::gemm_tn(t.value(a).data(), g.data(), t.grad_buffer(b).data(), m, k, n, true);
    }
  });
}

Var add(Var a, Var b) {
  require_same_tape(a, b);
  const Tensor& A = a.tape->value(a);
  const Tensor& B = b.tape->value(b);
  require_same_shape(A, B, "add");
  Tensor out = A;
  out += B;
  return record2(a, b, std::move(out), [a, b](Tape& t, const Tensor&, const Tensor& g) {
    if (t.requires_grad(a)) t.grad_buffer(a) += g;
    if (t.requires_grad(b)) t.grad_buffer(b) += g;
  });
}

Var sub(Var a, Var b) {
  require_same_tape(a, b);
  const Tensor& A = a.tape->value(a);
  const Tensor& B = b.tape->value(b);
  require_same_shape(A, B, "sub");
  Tensor out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= B[i];
  return record2(a, b, std::move(out), [a, b](Tape& t, const Tensor&, const Tensor& g) {
    if (t.requires_grad(a)) t.grad_buffer(a) += g;
    if (t.requires_grad(b)) {
      Tensor& gb = t.grad_buffer(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var add_bias(Var a, Var bias) {
  require_same_tape(a, bias);
  const Tensor& A = a.tape->value(a);
  const Tensor& B = bias.tape->value(bias);
  if (B.rows() != 1 || B.cols() != A.cols()) {
    throw DimensionError("add_bias: " + shape_str(A) + " + " + shape_str(B));
  }
  Tensor out = A;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += B[c];
  }
  return record2(a, bias, std::move(out), [a, bias](Tape& t, const Tensor&, const Tensor& g) {
    if (t.requires_grad(a)) t.grad_buffer(a) += g;
    if (t.requires_grad(bias)) {
      Tensor& gb = t.grad_buffer(bias);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        auto row = g.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) gb[c] += row[c];
      }
    }
  });
}

Var mul(Var a, Var b) {
  require_same_tape(a, b);
  const Tensor& A = a.tape->value(a);
  const Tensor& B = b.tape->value(b);
  require_same_shape(A, B, "mul");
  Tensor out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= B[i];
  return record2(a, b, std::move(out), [a, b](Tape& t, const Tensor&, const Tensor& g) {
    if (t.requires_grad(a)) {
      const Tensor& B = t.value(b);
      Tensor& ga = t.grad_buffer(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * B[i];
    }
    if (t.requires_grad(b)) {
      const Tensor& A = t.value(a);
      Tensor& gb = t.grad_buffer(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * A[i];
    }
  });
}

Var scale(Var a, double c) {
  Tensor out = a.tape->value(a);
  for (double& x : out.values()) x *= c;
  return record1(a, std::move(out), [a, c](Tape& t, const Tensor&, const Tensor& g) {
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
  });
}

Var add_scalar(Var a, double c) {
  Tensor out = a.tape->value(a);
  for (double& x : out.values()) x += c;
  return record1(a, std::move(out), [a](Tape& t, const Tensor&, const Tensor& g) { t.grad_buffer(a) += g; });
}

Var sigmoid(Var a) {
  Tensor out = a.tape->value(a);
  for (double& x : out.values()) {
    // Split by sign so exp never overflows.
    x = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }
  return record1(a, std::move(out), [a](Tape& t, const Tensor& s, const Tensor& g) {
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * s[i] * (1.0 - s[i]);
  });
}

Var relu(Var a) {
  Tensor out = a.tape->value(a);
  for (double& x : out.values()) x = x > 0.0 ? x : 0.0;
  return record1(a, std::move(out), [a](Tape& t, const Tensor& y, const Tensor& g) {
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (y[i] > 0.0) ga[i] += g[i];
    }
  });
}

Var log(Var a) {
  Tensor out = a.tape->value(a);
  for (double& x : out.values()) {
    if (!(x > 0.0)) throw ParameterError("log of non-positive value");
    x = std::log(x);
  }
  return record1(a, std::move(out), [a](Tape& t, const Tensor&, const Tensor& g) {
    const Tensor& A = t.value(a);
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / A[i];
  });
}

Var exp(Var a) {
  Tensor out = a.tape->value(a);
  for (double& x : out.values()) x = std::exp(x);
  return record1(a, std::move(out), [a](Tape& t, const Tensor& y, const Tensor& g) {
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
  });
}

Var clamp(Var a, double lo, double hi) {
  if (!(lo <= hi)) throw ParameterError("clamp: lo > hi");
  Tensor out = a.tape->value(a);
  for (double& x : out.values()) x = std::clamp(x, lo, hi);
  return record1(a, std::move(out), [a, lo, hi](Tape& t, const Tensor&, const Tensor& g) {
    const Tensor& A = t.value(a);
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (A[i] > lo && A[i] < hi) ga[i] += g[i];
    }
  });
}

namespace {

// Numerically stable log-softmax of x[0..n) / temperature into out.
void log_softmax_span(const double* x, double* out, std::size_t n, double temperature) {
  if (n == 0) return;
  double mx = x[0] / temperature;
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, x[i] / temperature);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) z += std::exp(x[i] / temperature - mx);
  const double lz = mx + std::log(z);
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] / temperature - lz;
}

// Gradient of log-softmax: dx_i = (g_i - softmax_i * sum_j g_j) / T.
void log_softmax_backward_span(const double* y, const double* g, double* dx, std::size_t n, double temperature) {
  double gs = 0.0;
  for (std::size_t i = 0; i < n; ++i) gs += g[i];
  for (std::size_t i = 0; i < n; ++i) dx[i] += (g[i] - std::exp(y[i]) * gs) / temperature;
}

}  // namespace

Var softmax(Var a, double temperature) {
  require_temperature(temperature);
  const Tensor& A = a.tape->value(a);
  Tensor out(A.rows(), A.cols());
  for (std::size_t r = 0; r < A.rows(); ++r) {
    log_softmax_span(A.row(r).data(), out.row(r).data(), A.cols(), temperature);
    for (double& x : out.row(r)) x = std::exp(x);
  }
  return record1(a, std::move(out), [a, temperature](Tape& t, const Tensor& s, const Tensor& g) {
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t r = 0; r < s.rows(); ++r) {
      const auto sr = s.row(r);
      const auto gr = g.row(r);
      double dot = 0.0;
      for (std::size_t c = 0; c < sr.size(); ++c) dot += gr[c] * sr[c];
      auto out = ga.row(r);
      for (std::size_t c = 0; c < sr.size(); ++c) out[c] += sr[c] * (gr[c] - dot) / temperature;
    }
  });
}

Var log_softmax(Var a, double temperature) {
  require_temperature(temperature);
  const Tensor& A = a.tape->value(a);
  Tensor out(A.rows(), A.cols());
  for (std::size_t r = 0; r < A.rows(); ++r) {
    log_softmax_span(A.row(r).data(), out.row(r).data(), A.cols(), temperature);
  }
  return record1(a, std::move(out), [a, temperature](Tape& t, const Tensor& y, const Tensor& g) {
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      log_softmax_backward_span(y.row(r).data(), g.row(r).data(), ga.row(r).data(), y.cols(), temperature);
    }
  });
}

Var segment_log_softmax(Var a, std::span<const std::size_t> offsets, double temperature) {
  require_temperature(temperature);
  const Tensor& A = a.tape->value(a);
  if (A.cols() != 1) throw DimensionError("segment_log_softmax expects a column vector, got " + shape_str(A));
  if (offsets.empty() || offsets.front() != 0 || offsets.back() != A.rows()) {
    throw DimensionError("segment_log_softmax: offsets must start at 0 and end at the row count");
  }
  for (std::size_t s = 1; s < offsets.size(); ++s) {
    if (offsets[s] < offsets[s - 1]) throw DimensionError("segment_log_softmax: offsets not monotone");
  }
  std::vector<std::size_t> segs(offsets.begin(), offsets.end());
  Tensor out(A.rows(), 1);
  for (std::size_t s = 0; s + 1 < segs.size(); ++s) {
    log_softmax_span(A.data() + segs[s], out.data() + segs[s], segs[s + 1] - segs[s], temperature);
  }
  return record1(a, std::move(out), [a, segs = std::move(segs), temperature](Tape& t, const Tensor& y,
                                                                             const Tensor& g) {
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t s = 0; s + 1 < segs.size(); ++s) {
      log_softmax_backward_span(y.data() + segs[s], g.data() + segs[s], ga.data() + segs[s], segs[s + 1] - segs[s],
                                temperature);
    }
  });
}

Var mean(Var a, int axis) {
  const Tensor& A = a.tape->value(a);
  if (axis != 0 && axis != 1) throw DimensionError("mean: axis must be 0 or 1");
  if (A.empty()) throw DimensionError("mean of an empty tensor");
  if (axis == 0) {
    Tensor out(1, A.cols());
    for (std::size_t r = 0; r < A.rows(); ++r)
      for (std::size_t c = 0; c < A.cols(); ++c) out[c] += A(r, c);
    for (double& x : out.values()) x /= static_cast<double>(A.rows());
    return record1(a, std::move(out), [a](Tape& t, const Tensor&, const Tensor& g) {
      Tensor& ga = t.grad_buffer(a);
      const double inv = 1.0 / static_cast<double>(ga.rows());
      for (std::size_t r = 0; r < ga.rows(); ++r)
        for (std::size_t c = 0; c < ga.cols(); ++c) ga(r, c) += g[c] * inv;
    });
  }
  Tensor out(A.rows(), 1);
  for (std::size_t r = 0; r < A.rows(); ++r) {
    double s = 0.0;
    for (double x : A.row(r)) s += x;
    out[r] = s / static_cast<double>(A.cols());
  }
  return record1(a, std::move(out), [a](Tape& t, const Tensor&, const Tensor& g) {
    Tensor& ga = t.grad_buffer(a);
    const double inv = 1.0 / static_cast<double>(ga.cols());
    for (std::size_t r = 0; r < ga.rows(); ++r)
      for (double& x : ga.row(r)) x += g[r] * inv;
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double x : a.tape->value(a).values()) s += x;
  return record1(a, Tensor::scalar(s), [a](Tape& t, const Tensor&, const Tensor& g) {
    const double gv = g[0];
    for (double& x : t.grad_buffer(a).values()) x += gv;
  });
}

Var mean_all(Var a) {
  const Tensor& A = a.tape->value(a);
  if (A.empty()) throw DimensionError("mean of an empty tensor");
  double s = 0.0;
  for (double x : A.values()) s += x;
  const double n = static_cast<double>(A.size());
  return record1(a, Tensor::scalar(s / n), [a, n](Tape& t, const Tensor&, const Tensor& g) {
    const double gv = g[0] / n;
    for (double& x : t.grad_buffer(a).values()) x += gv;
  });
}

Var concat(Var a, Var b, int axis) {
  require_same_tape(a, b);
  const Tensor& A = a.tape->value(a);
  const Tensor& B = b.tape->value(b);
  if (axis == 0) {
    if (A.cols() != B.cols()) throw DimensionError("concat rows: " + shape_str(A) + " / " + shape_str(B));
    Tensor out(A.rows() + B.rows(), A.cols());
    std::copy(A.values().begin(), A.values().end(), out.data());
    std::copy(B.values().begin(), B.values().end(), out.data() + A.size());
    const std::size_t split = A.size();
    return record2(a, b, std::move(out), [a, b, split](Tape& t, const Tensor&, const Tensor& g) {
      if (t.requires_grad(a)) {
        Tensor& ga = t.grad_buffer(a);
        for (std::size_t i = 0; i < split; ++i) ga[i] += g[i];
      }
      if (t.requires_grad(b)) {
        Tensor& gb = t.grad_buffer(b);
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[split + i];
      }
    });
  }
  if (axis != 1) throw DimensionError("concat: axis must be 0 or 1");
  if (A.rows() != B.rows()) throw DimensionError("concat cols: " + shape_str(A) + " | " + shape_str(B));
  const std::size_t ca = A.cols(), cb = B.cols();
  Tensor out(A.rows(), ca + cb);
  for (std::size_t r = 0; r < A.rows(); ++r) {
    std::copy(A.row(r).begin(), A.row(r).end(), out.row(r).begin());
    std::copy(B.row(r).begin(), B.row(r).end(), out.row(r).begin() + static_cast<std::ptrdiff_t>(ca));
  }
  return record2(a, b, std::move(out), [a, b, ca, cb](Tape& t, const Tensor&, const Tensor& g) {
    for (std::size_t r = 0; r < g.rows(); ++r) {
      const auto gr = g.row(r);
      if (t.requires_grad(a)) {
        auto out = t.grad_buffer(a).row(r);
        for (std::size_t c = 0; c < ca; ++c) out[c] += gr[c];
      }
      if (t.requires_grad(b)) {
        auto out = t.grad_buffer(b).row(r);
        for (std::size_t c = 0; c < cb; ++c) out[c] += gr[ca + c];
      }
    }
  });
}

Var dropout(Var a, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ParameterError("dropout rate must be in [0, 1)");
  if (rate == 0.0) return a;
  const Tensor& A = a.tape->value(a);
  const double keep_scale = 1.0 / (1.0 - rate);
  std::bernoulli_distribution keep(1.0 - rate);
  Tensor mask(A.rows(), A.cols());
  for (double& m : mask.values()) m = keep(rng) ? keep_scale : 0.0;
  Tensor out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return record1(a, std::move(out), [a, mask = std::move(mask)](Tape& t, const Tensor&, const Tensor& g) {
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * mask[i];
  });
}

Var gather_rows(Var a, std::span<const std::uint32_t> index) {
  const Tensor& A = a.tape->value(a);
  const std::size_t cols = A.cols();
  Tensor out(index.size(), cols);
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] >= A.rows()) throw DimensionError("gather_rows: index out of range");
    std::copy(A.row(index[r]).begin(), A.row(index[r]).end(), out.row(r).begin());
  }
  std::vector<std::uint32_t> idx(index.begin(), index.end());
  return record1(a, std::move(out), [a, idx = std::move(idx)](Tape& t, const Tensor&, const Tensor& g) {
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      auto dst = ga.row(idx[r]);
      const auto src = g.row(r);
      for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
    }
  });
}

Var mean_neighbors(Var a, const kernels::CsrView& graph) {
  const Tensor& A = a.tape->value(a);
  if (A.rows() != graph.num_nodes()) {
    throw DimensionError("mean_neighbors: " + std::to_string(A.rows()) + " rows for a graph of " +
                         std::to_string(graph.num_nodes()) + " nodes");
  }
  Tensor out(A.rows(), A.cols());
  kernels::mean_aggregate(graph, A.data(), out.data(), A.cols());
  // The view must outlive the tape; graphs are immutable after load.
  return record1(a, std::move(out), [a, graph](Tape& t, const Tensor&, const Tensor& g) {
    Tensor contrib(g.rows(), g.cols());
    kernels::mean_aggregate_adjoint(graph, g.data(), contrib.data(), g.cols());
    t.grad_buffer(a) += contrib;
  });
}

Var pair_hadamard(Var h, std::span<const std::uint32_t> u, std::span<const std::uint32_t> v) {
  const Tensor& H = h.tape->value(h);
  if (u.size() != v.size()) throw DimensionError("pair_hadamard: endpoint lists differ in length");
  for (std::size_t r = 0; r < u.size(); ++r) {
    if (u[r] >= H.rows() || v[r] >= H.rows()) throw DimensionError("pair_hadamard: node index out of range");
  }
  const std::size_t cols = H.cols();
  Tensor out(u.size(), cols);
  kernels::pair_hadamard(H.data(), cols, u, v, out.data());
  std::vector<std::uint32_t> us(u.begin(), u.end()), vs(v.begin(), v.end());
  return record1(h, std::move(out), [h, us = std::move(us), vs = std::move(vs)](Tape& t, const Tensor&,
                                                                               const Tensor& g) {
    const Tensor& H = t.value(h);
    Tensor& gh = t.grad_buffer(h);
    for (std::size_t r = 0; r < us.size(); ++r) {
      const auto gr = g.row(r);
      const auto hu = H.row(us[r]);
      const auto hv = H.row(vs[r]);
      auto du = gh.row(us[r]);
      for (std::size_t c = 0; c < gr.size(); ++c) du[c] += gr[c] * hv[c];
      auto dv = gh.row(vs[r]);
      for (std::size_t c = 0; c < gr.size(); ++c) dv[c] += gr[c] * hu[c];
    }
  });
}

}  // namespace ad

// ---------------------------------------------------------------------------
// Adam

Adam::Adam(double lr, double beta1, double beta2, double eps) : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  if (!(lr > 0.0)) throw ParameterError("learning rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ParameterError("Adam betas must be in [0, 1)");
  }
}

void Adam::step(std::span<Tensor* const> params, std::span<const Tensor* const> grads) {
  if (params.size() != grads.size()) throw DimensionError("Adam: params/grads count mismatch");
  if (m_.empty()) {
    for (const Tensor* p : params) {
      m_.emplace_back(p->rows(), p->cols());
      v_.emplace_back(p->rows(), p->cols());
    }
  } else if (m_.size() != params.size()) {
    throw UsageError("Adam: parameter list layout changed between steps");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = *grads[i];
    if (!p.same_shape(g) || !p.same_shape(m_[i])) throw DimensionError("Adam: gradient shape mismatch");
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      p[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

}  // namespace llp
