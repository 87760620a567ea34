#pragma once

// Loop nests shared by every backend. `Prim` supplies inline dot/axpy
// for the target instruction set; everything else is expressed through them.

#include <cstddef>

namespace hmlr::kernels::detail {

template <class Prim>
struct Loops {
  static double dot(const double* a, const double* b, std::size_t n) { return Prim::dot(a, b, n); }

  static void axpy(double alpha, const double* x, double* y, std::size_t n) {
    Prim::axpy(alpha, x, y, n);
  }

  static void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a,
                      const double* b, double* c) {
    for (std::size_t i = 0; i < m; ++i) {
      double* ci = c + i * n;
      const double* ai = a + i * k;
      for (std::size_t p = 0; p < k; ++p) {
        Prim::axpy(ai[p], b + p * n, ci, n);
      }
    }
  }

  static void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a,
                      const double* b, double* c) {
    for (std::size_t i = 0; i < m; ++i) {
      const double* ai = a + i * k;
      double* ci = c + i * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += Prim::dot(ai, b + j * k, k);
    }
  }

  static void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a,
                      const double* b, double* c) {
    for (std::size_t p = 0; p < k; ++p) {
      const double* ap = a + p * m;
      const double* bp = b + p * n;
      for (std::size_t i = 0; i < m; ++i) {
        Prim::axpy(ap[i], bp, c + i * n, n);
      }
    }
  }

  static void batched_matvec(std::size_t batch, std::size_t rows, std::size_t cols,
                             const double* mats, std::size_t mat_stride, const double* x,
                             double* y) {
    for (std::size_t s = 0; s < batch; ++s) {
      const double* m = mats + s * mat_stride;
      const double* xs = x + s * cols;
      double* ys = y + s * rows;
      for (std::size_t r = 0; r < rows; ++r) ys[r] += Prim::dot(m + r * cols, xs, cols);
    }
  }

  static void batched_matvec_t(std::size_t batch, std::size_t rows, std::size_t cols,
                               const double* mats, std::size_t mat_stride, const double* y,
                               double* x) {
    for (std::size_t s = 0; s < batch; ++s) {
      const double* m = mats + s * mat_stride;
      const double* ys = y + s * rows;
      double* xs = x + s * cols;
      for (std::size_t r = 0; r < rows; ++r) {
        Prim::axpy(ys[r], m + r * cols, xs, cols);
      }
    }
  }

  static void batched_outer(std::size_t batch, std::size_t rows, std::size_t cols,
                            const double* g, const double* x, double* grads,
                            std::size_t grad_stride) {
    for (std::size_t s = 0; s < batch; ++s) {
      const double* gs = g + s * rows;
      const double* xs = x + s * cols;
      double* out = grads + s * grad_stride;
      for (std::size_t r = 0; r < rows; ++r) {
        Prim::axpy(gs[r], xs, out + r * cols, cols);
      }
    }
  }
};

template <class Prim>
KernelTable make_table(Backend backend, const char* name) {
  using L = Loops<Prim>;
  return KernelTable{backend,       name,         &L::dot,           &L::axpy,
                     &L::gemm_nn,   &L::gemm_nt,  &L::gemm_tn,       &L::batched_matvec,
                     &L::batched_matvec_t, &L::batched_outer};
}

}  // namespace hmlr::kernels::detail
