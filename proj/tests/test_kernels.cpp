#include <array>
#include <cmath>
#include <cstdlib>

#include "doctest.h"
#include "hmlr/errors.hpp"
#include "hmlr/kernels.hpp"
#include "hmlr/rng.hpp"

using namespace hmlr;
namespace k = hmlr::kernels;

namespace {

std::vector<double> randn(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

void check_close(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(std::abs(a[i] - b[i]) <= 1e-12 * (1.0 + std::abs(b[i])));
  }
}

// Compares one backend against the scalar reference on odd sizes that hit every tail path.
void compare(const k::KernelTable& t) {
  const k::KernelTable& ref = k::table(k::Backend::Scalar);
  Rng rng(99);
  for (std::size_t n : {1u, 3u, 4u, 7u, 8u, 9u, 16u, 17u, 33u, 100u}) {
    const auto a = randn(n, rng), b = randn(n, rng);
    CHECK(t.dot(a.data(), b.data(), n) == doctest::Approx(ref.dot(a.data(), b.data(), n)).epsilon(1e-13));
    auto y1 = b, y2 = b;
    t.axpy(0.37, a.data(), y1.data(), n);
    ref.axpy(0.37, a.data(), y2.data(), n);
    check_close(y1, y2);
  }
  for (auto [m, n, kk] : {std::array<std::size_t, 3>{1, 1, 1}, {3, 5, 7}, {8, 4, 17}, {100, 17, 9}, {5, 216, 100}}) {
    const auto a = randn(m * kk, rng), b_nn = randn(kk * n, rng), b_nt = randn(n * kk, rng), a_tn = randn(kk * m, rng);
    const auto c0 = randn(m * n, rng);
    auto c1 = c0, c2 = c0;
    t.gemm_nn(m, n, kk, a.data(), b_nn.data(), c1.data());
    ref.gemm_nn(m, n, kk, a.data(), b_nn.data(), c2.data());
    check_close(c1, c2);
    c1 = c0, c2 = c0;
    t.gemm_nt(m, n, kk, a.data(), b_nt.data(), c1.data());
    ref.gemm_nt(m, n, kk, a.data(), b_nt.data(), c2.data());
    check_close(c1, c2);
    c1 = c0, c2 = c0;
    t.gemm_tn(m, n, kk, a_tn.data(), b_nn.data(), c1.data());
    ref.gemm_tn(m, n, kk, a_tn.data(), b_nn.data(), c2.data());
    check_close(c1, c2);
  }
  for (std::size_t stride_on : {0u, 1u}) {
    const std::size_t batch = 13, rows = 4, cols = 8;
    const std::size_t stride = stride_on ? rows * cols : 0;
    const auto mats = randn(stride_on ? batch * rows * cols : rows * cols, rng);
    const auto x = randn(batch * cols, rng), yv = randn(batch * rows, rng);
    auto y1 = randn(batch * rows, rng), y2 = y1;
    t.batched_matvec(batch, rows, cols, mats.data(), stride, x.data(), y1.data());
    ref.batched_matvec(batch, rows, cols, mats.data(), stride, x.data(), y2.data());
    check_close(y1, y2);
    auto x1 = randn(batch * cols, rng), x2 = x1;
    t.batched_matvec_t(batch, rows, cols, mats.data(), stride, yv.data(), x1.data());
    ref.batched_matvec_t(batch, rows, cols, mats.data(), stride, yv.data(), x2.data());
    check_close(x1, x2);
    auto g1 = randn(stride_on ? batch * rows * cols : rows * cols, rng), g2 = g1;
    t.batched_outer(batch, rows, cols, yv.data(), x.data(), g1.data(), stride);
    ref.batched_outer(batch, rows, cols, yv.data(), x.data(), g2.data(), stride);
    check_close(g1, g2);
  }
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("scalar reference by hand") {
  const k::KernelTable& s = k::table(k::Backend::Scalar);
  const std::vector<double> a{1, 2, 3}, b{4, 5, 6};
  CHECK(s.dot(a.data(), b.data(), 3) == 32.0);
  std::vector<double> c(4, 1.0);
  const std::vector<double> m{1, 2, 3, 4};
  s.gemm_nn(2, 2, 2, m.data(), m.data(), c.data());  // C = 1 + [[7,10],[15,22]]
  CHECK(c == std::vector<double>{8, 11, 16, 23});
  // NaN must propagate, not be skipped
  const std::vector<double> z{0.0, 0.0}, nan{std::nan(""), 1.0};
  CHECK(std::isnan(s.dot(z.data(), nan.data(), 2)));
}

TEST_CASE("every available backend matches scalar") {
  for (k::Backend be : {k::Backend::Scalar, k::Backend::Avx2, k::Backend::Neon}) {
    if (!k::available(be)) {
      CHECK_THROWS_AS(k::table(be), Error);
      continue;
    }
    INFO(k::table(be).name);
    compare(k::table(be));
  }
}

TEST_CASE("selection and parsing") {
  CHECK(k::parse_backend("scalar") == k::Backend::Scalar);
  CHECK(k::parse_backend("avx2") == k::Backend::Avx2);
  CHECK(k::parse_backend("neon") == k::Backend::Neon);
  CHECK_THROWS_AS(k::parse_backend("sse9"), Error);
  const k::Backend before = k::active().backend;
  k::select(k::Backend::Scalar);
  CHECK(k::active().backend == k::Backend::Scalar);
  k::select(before);
  CHECK(k::active().backend == before);
}

}  // TEST_SUITE
