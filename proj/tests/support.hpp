#pragma once

// Shared test helpers: seeded generators and a central-difference gradient
// oracle that never looks at the tape's own gradients.

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <vector>

#include "llp/autodiff.hpp"
#include "llp/graph.hpp"
#include "llp/tensor.hpp"

namespace llp::testing {

inline Tensor random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor t(rows, cols);
  for (double& x : t.values()) x = d(rng);
  return t;
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

inline std::size_t random_size(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

/// Erdos-Renyi G(n, p) with Gaussian features.
inline Graph random_graph(std::size_t n, double p, std::size_t features, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(p);
  std::vector<Edge> edges;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      if (coin(rng)) edges.push_back({u, v});
    }
  }
  auto x = std::make_shared<Tensor>(random_tensor(n, features, rng));
  return Graph::from_edges(n, edges, std::move(x));
}

inline Graph graph_from(std::size_t n, std::vector<Edge> edges, std::size_t features = 1) {
  return Graph::from_edges(n, edges, std::make_shared<Tensor>(n, features, 1.0));
}

/// Central differences of f over every entry of the listed tensors.
inline std::vector<double> numeric_gradient(const std::function<double()>& f, const std::vector<Tensor*>& params,
                                            double h = 1e-5) {
  std::vector<double> g;
  for (Tensor* t : params) {
    for (std::size_t i = 0; i < t->size(); ++i) {
      const double saved = (*t)[i];
      (*t)[i] = saved + h;
      const double up = f();
      (*t)[i] = saved - h;
      const double down = f();
      (*t)[i] = saved;
      g.push_back((up - down) / (2.0 * h));
    }
  }
  return g;
}

/// ||a - n|| / max(||a||, ||n||); 0 when both vanish.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& n) {
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - n[i]) * (a[i] - n[i]);
    na += a[i] * a[i];
    nn += n[i] * n[i];
  }
  const double scale = std::sqrt(std::max(na, nn));
  return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

/// Builds a tape from the current values of params (all as leaves), runs
/// build to get a scalar root, and returns the tape gradient together with
/// the finite-difference estimate.
struct GradCheck {
  std::vector<double> analytic;
  std::vector<double> numeric;
  double error() const { return relative_error(analytic, numeric); }
};

inline GradCheck grad_check(const std::vector<Tensor*>& params,
                            const std::function<Var(Tape&, const std::vector<Var>&)>& build) {
  auto value = [&] {
    Tape tape;
    std::vector<Var> vars;
    for (Tensor* t : params) vars.push_back(tape.leaf(*t));
    return tape.value(build(tape, vars)).item();
  };
  GradCheck gc;
  {
    Tape tape;
    std::vector<Var> vars;
    for (Tensor* t : params) vars.push_back(tape.leaf(*t));
    Var root = build(tape, vars);
    tape.backward(root);
    for (Var v : vars) {
      const Tensor g = tape.grad(v);
      gc.analytic.insert(gc.analytic.end(), g.values().begin(), g.values().end());
    }
  }
  gc.numeric = numeric_gradient(value, params);
  return gc;
}

}  // namespace llp::testing
