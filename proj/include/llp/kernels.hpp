#pragma once

// Dense kernels behind the tensor engine and the inference paths.
//
// Every kernel has a serial reference in llp::kernels::serial and an OpenMP
// version in llp::kernels::parallel. Parallel versions split work along
// output rows (or output columns for gemm_tn) only, so the per-element
// accumulation order is identical to the serial code and results are
// bit-identical for any thread count.

#include <cstddef>
#include <cstdint>
#include <span>

namespace llp::kernels {

/// Read-only view of a symmetric CSR adjacency.
struct CsrView {
  std::span<const std::uint64_t> offsets;  // size n + 1
  std::span<const std::uint32_t> neighbors;

  std::size_t num_nodes() const noexcept { return offsets.empty() ? 0 : offsets.size() - 1; }
  std::size_t degree(std::size_t v) const noexcept { return offsets[v + 1] - offsets[v]; }
};

namespace serial {

/// C (m x n) = A (m x k) * B (k x n), or C += A*B when accumulate.
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate);

/// C (k x n) = A^T * B where A is m x k and B is m x n; C += when accumulate.
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate);

/// out[i] = mean over neighbors j of in[j]; isolated rows are zero.
void mean_aggregate(const CsrView& g, const double* in, double* out, std::size_t cols);

/// Adjoint of mean_aggregate for a symmetric graph:
/// out[j] = sum over neighbors i of in[i] / deg(i).
void mean_aggregate_adjoint(const CsrView& g, const double* in, double* out, std::size_t cols);

/// out[r] = h[u[r]] (.) h[v[r]] for each pair r.
void pair_hadamard(const double* h, std::size_t cols, std::span<const std::uint32_t> u,
                   std::span<const std::uint32_t> v, double* out);

}  // namespace serial

namespace parallel {

void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate);
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate);
void mean_aggregate(const CsrView& g, const double* in, double* out, std::size_t cols);
void mean_aggregate_adjoint(const CsrView& g, const double* in, double* out, std::size_t cols);
void pair_hadamard(const double* h, std::size_t cols, std::span<const std::uint32_t> u,
                   std::span<const std::uint32_t> v, double* out);

}  // namespace parallel

/// True when the parallel namespace was compiled with OpenMP.
bool openmp_enabled() noexcept;

/// Process-wide thread budget for the dispatching wrappers below. 1 forces
/// the serial path; 0 means "OpenMP default".
void set_num_threads(int n) noexcept;
int num_threads() noexcept;

// Dispatching wrappers used by the rest of the library. Small problems and
// a thread budget of 1 go to the serial reference.
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate);
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate);
void mean_aggregate(const CsrView& g, const double* in, double* out, std::size_t cols);
void mean_aggregate_adjoint(const CsrView& g, const double* in, double* out, std::size_t cols);
void pair_hadamard(const double* h, std::size_t cols, std::span<const std::uint32_t> u,
                   std::span<const std::uint32_t> v, double* out);

}  // namespace llp::kernels
