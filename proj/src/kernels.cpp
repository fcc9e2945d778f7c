#include "llp/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cstring>

#ifdef LLP_HAS_OPENMP
#include <omp.h>
#endif

namespace llp::kernels {

namespace {

// Row i of C = A(i,:) * B. Entries of A equal to zero are skipped; sparse
// bag-of-words features and post-relu activations make this worthwhile.
inline void gemm_nn_row(const double* a_row, const double* b, double* c_row, std::size_t k, std::size_t n,
                        bool accumulate) {
  if (!accumulate) std::memset(c_row, 0, n * sizeof(double));
  for (std::size_t p = 0; p < k; ++p) {
    const double s = a_row[p];
    if (s == 0.0) continue;
    const double* b_row = b + p * n;
    for (std::size_t j = 0; j < n; ++j) c_row[j] += s * b_row[j];
  }
}

// Columns [j0, j1) of C = A^T B, accumulating over rows of A in order.
inline void gemm_tn_cols(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
                         std::size_t j0, std::size_t j1, bool accumulate) {
  if (!accumulate) {
    for (std::size_t p = 0; p < k; ++p) std::fill(c + p * n + j0, c + p * n + j1, 0.0);
  }
  for (std::size_t i = 0; i < m; ++i) {
    const double* a_row = a + i * k;
    const double* b_row = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double s = a_row[p];
      if (s == 0.0) continue;
      double* c_row = c + p * n;
      for (std::size_t j = j0; j < j1; ++j) c_row[j] += s * b_row[j];
    }
  }
}

inline void mean_aggregate_row(const CsrView& g, const double* in, double* out, std::size_t cols, std::size_t i) {
  double* o = out + i * cols;
  std::fill(o, o + cols, 0.0);
  const auto begin = g.offsets[i];
  const auto end = g.offsets[i + 1];
  if (begin == end) return;
  for (auto e = begin; e < end; ++e) {
    const double* src = in + static_cast<std::size_t>(g.neighbors[e]) * cols;
    for (std::size_t c = 0; c < cols; ++c) o[c] += src[c];
  }
  const double inv = 1.0 / static_cast<double>(end - begin);
  for (std::size_t c = 0; c < cols; ++c) o[c] *= inv;
}

inline void mean_aggregate_adjoint_row(const CsrView& g, const double* in, double* out, std::size_t cols,
                                       std::size_t j) {
  double* o = out + j * cols;
  std::fill(o, o + cols, 0.0);
  for (auto e = g.offsets[j]; e < g.offsets[j + 1]; ++e) {
    const std::size_t i = g.neighbors[e];
    const double w = 1.0 / static_cast<double>(g.degree(i));
    const double* src = in + i * cols;
    for (std::size_t c = 0; c < cols; ++c) o[c] += w * src[c];
  }
}

inline void pair_hadamard_row(const double* h, std::size_t cols, std::uint32_t u, std::uint32_t v, double* out) {
  const double* hu = h + static_cast<std::size_t>(u) * cols;
  const double* hv = h + static_cast<std::size_t>(v) * cols;
  for (std::size_t c = 0; c < cols; ++c) out[c] = hu[c] * hv[c];
}

std::atomic<int> g_num_threads{0};

// Below this many multiply-adds the fork/join overhead dominates.
constexpr std::size_t kParallelWork = 1u << 15;

bool use_parallel(std::size_t work) {
  return openmp_enabled() && g_num_threads.load(std::memory_order_relaxed) != 1 && work >= kParallelWork;
}

}  // namespace

namespace serial {

void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) gemm_nn_row(a + i * k, b, c + i * n, k, n, accumulate);
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate) {
  gemm_tn_cols(a, b, c, m, k, n, 0, n, accumulate);
}

void mean_aggregate(const CsrView& g, const double* in, double* out, std::size_t cols) {
  for (std::size_t i = 0; i < g.num_nodes(); ++i) mean_aggregate_row(g, in, out, cols, i);
}

void mean_aggregate_adjoint(const CsrView& g, const double* in, double* out, std::size_t cols) {
  for (std::size_t j = 0; j < g.num_nodes(); ++j) mean_aggregate_adjoint_row(g, in, out, cols, j);
}

void pair_hadamard(const double* h, std::size_t cols, std::span<const std::uint32_t> u,
                   std::span<const std::uint32_t> v, double* out) {
  for (std::size_t r = 0; r < u.size(); ++r) pair_hadamard_row(h, cols, u[r], v[r], out + r * cols);
}

}  // namespace serial

namespace parallel {

#ifdef LLP_HAS_OPENMP

namespace {
int team_size() {
  const int n = g_num_threads.load(std::memory_order_relaxed);
  return n > 0 ? n : omp_get_max_threads();
}
}  // namespace

void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate) {
  const auto rows = static_cast<std::int64_t>(m);
#pragma omp parallel for schedule(static) num_threads(team_size())
  for (std::int64_t i = 0; i < rows; ++i) {
    gemm_nn_row(a + i * k, b, c + i * n, k, n, accumulate);
  }
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate) {
  // Column slabs keep each output element owned by one thread.
  constexpr std::size_t kSlab = 32;
  const auto slabs = static_cast<std::int64_t>((n + kSlab - 1) / kSlab);
#pragma omp parallel for schedule(static) num_threads(team_size())
  for (std::int64_t s = 0; s < slabs; ++s) {
    const std::size_t j0 = static_cast<std::size_t>(s) * kSlab;
    gemm_tn_cols(a, b, c, m, k, n, j0, std::min(n, j0 + kSlab), accumulate);
  }
}

void mean_aggregate(const CsrView& g, const double* in, double* out, std::size_t cols) {
  const auto rows = static_cast<std::int64_t>(g.num_nodes());
#pragma omp parallel for schedule(dynamic, 256) num_threads(team_size())
  for (std::int64_t i = 0; i < rows; ++i) mean_aggregate_row(g, in, out, cols, i);
}

void mean_aggregate_adjoint(const CsrView& g, const double* in, double* out, std::size_t cols) {
  const auto rows = static_cast<std::int64_t>(g.num_nodes());
#pragma omp parallel for schedule(dynamic, 256) num_threads(team_size())
  for (std::int64_t j = 0; j < rows; ++j) mean_aggregate_adjoint_row(g, in, out, cols, j);
}

void pair_hadamard(const double* h, std::size_t cols, std::span<const std::uint32_t> u,
                   std::span<const std::uint32_t> v, double* out) {
  const auto rows = static_cast<std::int64_t>(u.size());
#pragma omp parallel for schedule(static) num_threads(team_size())
  for (std::int64_t r = 0; r < rows; ++r) pair_hadamard_row(h, cols, u[r], v[r], out + r * cols);
}

#else

void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate) {
  serial::gemm_nn(a, b, c, m, k, n, accumulate);
}
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate) {
  serial::gemm_tn(a, b, c, m, k, n, accumulate);
}
void mean_aggregate(const CsrView& g, const double* in, double* out, std::size_t cols) {
  serial::mean_aggregate(g, in, out, cols);
}
void mean_aggregate_adjoint(const CsrView& g, const double* in, double* out, std::size_t cols) {
  serial::mean_aggregate_adjoint(g, in, out, cols);
}
void pair_hadamard(const double* h, std::size_t cols, std::span<const std::uint32_t> u,
                   std::span<const std::uint32_t> v, double* out) {
  serial::pair_hadamard(h, cols, u, v, out);
}

#endif

}  // namespace parallel

bool openmp_enabled() noexcept {
#ifdef LLP_HAS_OPENMP
  return true;
#else
  return false;
#endif
}

void set_num_threads(int n) noexcept { g_num_threads.store(n < 0 ? 0 : n, std::memory_order_relaxed); }
int num_threads() noexcept { return g_num_threads.load(std::memory_order_relaxed); }

void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate) {
  if (use_parallel(m * k * n))
    parallel::gemm_nn(a, b, c, m, k, n, accumulate);
  else
    serial::gemm_nn(a, b, c, m, k, n, accumulate);
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate) {
  if (use_parallel(m * k * n))
    parallel::gemm_tn(a, b, c, m, k, n, accumulate);
  else
    serial::gemm_tn(a, b, c, m, k, n, accumulate);
}

void mean_aggregate(const CsrView& g, const double* in, double* out, std::size_t cols) {
  if (use_parallel(g.neighbors.size() * cols))
    parallel::mean_aggregate(g, in, out, cols);
  else
    serial::mean_aggregate(g, in, out, cols);
}

void mean_aggregate_adjoint(const CsrView& g, const double* in, double* out, std::size_t cols) {
  if (use_parallel(g.neighbors.size() * cols))
    parallel::mean_aggregate_adjoint(g, in, out, cols);
  else
    serial::mean_aggregate_adjoint(g, in, out, cols);
}

void pair_hadamard(const double* h, std::size_t cols, std::span<const std::uint32_t> u,
                   std::span<const std::uint32_t> v, double* out) {
  if (use_parallel(u.size() * cols))
    parallel::pair_hadamard(h, cols, u, v, out);
  else
    serial::pair_hadamard(h, cols, u, v, out);
}

}  // namespace llp::kernels
