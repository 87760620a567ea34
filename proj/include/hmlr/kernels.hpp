#pragma once

// Dense double-precision inner loops used by the autodiff tape and the
// detectors. Each backend provides the same table; the active one is chosen
// once at startup from CPU features (override with HMLR_KERNELS=scalar|avx2|neon).

#include <cstddef>
#include <string_view>

namespace hmlr::kernels {

enum class Backend { Scalar, Avx2, Neon };

struct KernelTable {
  Backend backend;
  const char* name;

  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

  // All matrices row-major, contiguous. Accumulating: C += op(A) op(B).
  // C[m×n] += A[m×k] B[k×n]
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                  double* c);
  // C[m×n] += A[m×k] B[n×k]^T
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                  double* c);
  // C[m×n] += A[k×m]^T B[k×n]
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                  double* c);

  // For each s < batch: y_s[rows] += M_s[rows×cols] x_s[cols].
  // mat_stride == 0 shares one matrix across the batch.
  void (*batched_matvec)(std::size_t batch, std::size_t rows, std::size_t cols, const double* mats,
                         std::size_t mat_stride, const double* x, double* y);
  // For each s: x_s[cols] += M_s^T y_s[rows].
  void (*batched_matvec_t)(std::size_t batch, std::size_t rows, std::size_t cols,
                           const double* mats, std::size_t mat_stride, const double* y, double* x);
  // For each s: G_s[rows×cols] += g_s[rows] x_s[cols]^T. grad_stride == 0 sums into one matrix.
  void (*batched_outer)(std::size_t batch, std::size_t rows, std::size_t cols, const double* g,
                        const double* x, double* grads, std::size_t grad_stride);
};

bool available(Backend backend);
// Throws Error(Unsupported) when the backend is not compiled in or the CPU lacks it.
const KernelTable& table(Backend backend);
const KernelTable& active();
void select(Backend backend);
Backend parse_backend(std::string_view name);

}  // namespace hmlr::kernels
