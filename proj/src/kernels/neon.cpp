#include "backends.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)

#include <arm_neon.h>

#include "loops.hpp"

namespace hmlr::kernels::detail {

namespace {

struct NeonPrim {
  static double dot(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
      acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
      acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    }
    if (i + 2 <= n) {
      acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
      i += 2;
    }
    double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
  }

  static void axpy(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
  }
};

}  // namespace

const KernelTable* neon_table() {
  static const KernelTable t = make_table<NeonPrim>(Backend::Neon, "neon");
  return &t;
}

}  // namespace hmlr::kernels::detail

#else

namespace hmlr::kernels::detail {
const KernelTable* neon_table() { return nullptr; }
}  // namespace hmlr::kernels::detail

#endif
