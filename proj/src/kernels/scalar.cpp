#include "backends.hpp"
#include "loops.hpp"

namespace hmlr::kernels::detail {

namespace {

struct ScalarPrim {
  static double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
  }
  static void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
  }
};

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t = make_table<ScalarPrim>(Backend::Scalar, "scalar");
  return t;
}

}  // namespace hmlr::kernels::detail
