#include <doctest.h>

#include "llp/kernels.hpp"
#include "support.hpp"

using namespace llp;
using llp::testing::random_graph;
using llp::testing::random_size;
using llp::testing::random_tensor;

namespace {

std::vector<std::uint32_t> random_index(std::size_t count, std::size_t n, std::mt19937_64& rng) {
  std::vector<std::uint32_t> idx(count);
  for (auto& i : idx) i = static_cast<std::uint32_t>(random_size(rng, 0, n - 1));
  return idx;
}

}  // namespace

TEST_CASE("parallel kernels are bit-identical to the serial reference") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t m = random_size(rng, 1, 300), k = random_size(rng, 1, 40), n = random_size(rng, 1, 40);
    const Tensor a = random_tensor(m, k, rng), b = random_tensor(k, n, rng), bt = random_tensor(m, n, rng);
    for (bool acc : {false, true}) {
      Tensor c1 = random_tensor(m, n, rng), c2 = c1;
      kernels::serial::gemm_nn(a.data(), b.data(), c1.data(), m, k, n, acc);
      kernels::parallel::gemm_nn(a.data(), b.data(), c2.data(), m, k, n, acc);
      CHECK(c1 == c2);
      Tensor d1 = random_tensor(k, n, rng), d2 = d1;
      kernels::serial::gemm_tn(a.data(), bt.data(), d1.data(), m, k, n, acc);
      kernels::parallel::gemm_tn(a.data(), bt.data(), d2.data(), m, k, n, acc);
      CHECK(d1 == d2);
    }

    const Graph g = random_graph(m, 0.05, 1, rng);
    const Tensor h = random_tensor(m, n, rng);
    Tensor o1(m, n), o2(m, n);
    kernels::serial::mean_aggregate(g.csr(), h.data(), o1.data(), n);
    kernels::parallel::mean_aggregate(g.csr(), h.data(), o2.data(), n);
    CHECK(o1 == o2);
    kernels::serial::mean_aggregate_adjoint(g.csr(), h.data(), o1.data(), n);
    kernels::parallel::mean_aggregate_adjoint(g.csr(), h.data(), o2.data(), n);
    CHECK(o1 == o2);

    const std::size_t pairs = random_size(rng, 1, 200);
    const auto u = random_index(pairs, m, rng), v = random_index(pairs, m, rng);
    Tensor p1(pairs, n), p2(pairs, n);
    kernels::serial::pair_hadamard(h.data(), n, u, v, p1.data());
    kernels::parallel::pair_hadamard(h.data(), n, u, v, p2.data());
    CHECK(p1 == p2);
  }
}

TEST_CASE("gemm matches a naive triple loop") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = random_size(rng, 1, 9), k = random_size(rng, 1, 9), n = random_size(rng, 1, 9);
    const Tensor a = random_tensor(m, k, rng), b = random_tensor(k, n, rng);
    Tensor c(m, n);
    kernels::gemm_nn(a.data(), b.data(), c.data(), m, k, n, false);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t t = 0; t < k; ++t) s += a(i, t) * b(t, j);
        CHECK(c(i, j) == doctest::Approx(s).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("mean_aggregate adjoint identity") {
  // <A x, y> == <x, A^T y> for the mean operator and its adjoint.
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = random_size(rng, 2, 40);
    const Graph g = random_graph(n, 0.2, 1, rng);
    const Tensor x = random_tensor(n, 3, rng), y = random_tensor(n, 3, rng);
    Tensor ax(n, 3), aty(n, 3);
    kernels::mean_aggregate(g.csr(), x.data(), ax.data(), 3);
    kernels::mean_aggregate_adjoint(g.csr(), y.data(), aty.data(), 3);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      lhs += ax[i] * y[i];
      rhs += x[i] * aty[i];
    }
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("thread budget setting") {
  const int saved = kernels::num_threads();
  kernels::set_num_threads(1);
  CHECK(kernels::num_threads() == 1);
  kernels::set_num_threads(saved);
  CHECK(kernels::num_threads() == saved);
}
