#include <cmath>
#include <functional>

#include "doctest.h"
#include "hmlr/autodiff.hpp"
#include "hmlr/errors.hpp"
#include "hmlr/rng.hpp"
#include "support/fd.hpp"

using namespace hmlr;
using hmlr::testing::numeric_gradient;
using hmlr::testing::relative_error;

namespace {

std::vector<double> randn(std::size_t n, Rng& rng, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

// Builds a scalar from one parameter tensor; checks reverse mode against central differences.
using Graph = std::function<ad::Var(ad::Tape&, ad::Var)>;

double check_graph(ad::Shape shape, std::vector<double> x0, const Graph& g) {
  ad::Tape tape;
  const ad::Var p = tape.parameter(shape, x0);
  const ad::Var root = g(tape, p);
  tape.backward(root);
  const std::vector<double> analytic(tape.grad(p).begin(), tape.grad(p).end());
  const auto f = [&](std::span<const double> x) {
    ad::Tape t;
    return g(t, t.parameter(shape, x)).item();
  };
  return relative_error(analytic, numeric_gradient(f, x0));
}

}  // namespace

TEST_SUITE("autodiff") {

TEST_CASE("scalar helpers") {
  CHECK(ad::elu_value(-1.0) == doctest::Approx(-0.6321205588).epsilon(1e-10));
  CHECK(ad::elu_value(2.5) == 2.5);
  CHECK(ad::softplus_value(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(ad::softplus_value(800.0) == 800.0);
  CHECK(ad::softplus_value(-800.0) >= 0.0);
  CHECK(ad::softplus_inverse(1.0) == doctest::Approx(0.5413248546).epsilon(1e-10));
  for (double y : {1e-6, 0.3, 1.0, 7.0, 50.0}) {
    CHECK(ad::softplus_value(ad::softplus_inverse(y)) == doctest::Approx(y).epsilon(1e-12));
  }
}

TEST_CASE("two-point denoiser is a scaled tanh") {
  const double a = 1.0 / std::sqrt(2.0);
  const std::vector<double> levels{-a, a};
  for (double z : {-2.0, -0.3, 0.0, 0.1, 0.7, 3.0}) {
    for (double v : {0.05, 0.5, 2.0}) {
      CHECK(ad::gaussian_denoise_value(z, v, levels) == doctest::Approx(a * std::tanh(2.0 * a * z / v)).epsilon(1e-12));
    }
  }
  CHECK(ad::gaussian_denoise_value(0.1, 0.5, levels) == doctest::Approx(0.1948319805).epsilon(1e-9));
  // far outside the constellation the estimate saturates without overflow
  CHECK(ad::gaussian_denoise_value(1e6, 1e-6, levels) == doctest::Approx(a));
  CHECK_THROWS_AS(ad::gaussian_denoise_value(0.0, 0.0, levels), Error);
}

TEST_CASE("forward values") {
  ad::Tape tape;
  const ad::Var a = tape.constant({2, 2}, std::vector<double>{1, 2, 3, 4});
  const ad::Var b = tape.constant({2, 2}, std::vector<double>{5, 6, 7, 8});
  const ad::Var c = ad::matmul(a, b);
  CHECK(std::vector<double>(c.value().begin(), c.value().end()) == std::vector<double>{19, 22, 43, 50});
  const ad::Var d = ad::matmul_nt(a, b);
  CHECK(std::vector<double>(d.value().begin(), d.value().end()) == std::vector<double>{17, 23, 39, 53});
  const ad::Var row = tape.constant({1, 2}, std::vector<double>{10, 20});
  const ad::Var e = ad::add(a, row);
  CHECK(std::vector<double>(e.value().begin(), e.value().end()) == std::vector<double>{11, 22, 13, 24});
  CHECK(ad::sum(a).item() == 10.0);
  CHECK(ad::mean(a).item() == 2.5);
  const ad::Var m = ad::matvec(tape.constant({1, 4}, std::vector<double>{1, 2, 3, 4}),
                               tape.constant({2, 2}, std::vector<double>{1, 0, 0, 1}), 2);
  CHECK(std::vector<double>(m.value().begin(), m.value().end()) == std::vector<double>{1, 3, 2, 4});
  CHECK_THROWS_AS(ad::matmul(a, tape.constant({3, 1}, std::vector<double>{1, 2, 3})), Error);
  CHECK_THROWS_AS(ad::add(a, tape.constant({3, 3}, std::vector<double>(9, 0.0))), Error);
}

TEST_CASE("gradients of every primitive match finite differences") {
  Rng rng(101);
  for (int trial = 0; trial < 10; ++trial) {
    const std::vector<double> x = randn(12, rng);
    const ad::Shape s{3, 4};
    const std::vector<double> other = randn(12, rng);
    const std::vector<double> row = randn(4, rng);
    const std::vector<double> col = randn(3, rng);
    const std::vector<double> w8 = randn(8, rng);
    const std::vector<double> w24 = randn(24, rng);
    auto c = [&](ad::Tape& t, ad::Shape sh, const std::vector<double>& v) { return t.constant(sh, v); };
    const std::vector<std::pair<const char*, Graph>> graphs{
        {"add", [&](ad::Tape& t, ad::Var p) { return ad::sum(ad::square(ad::add(p, c(t, s, other)))); }},
        {"sub-row", [&](ad::Tape& t, ad::Var p) { return ad::sum(ad::square(ad::sub(p, c(t, {1, 4}, row)))); }},
        {"mul-col", [&](ad::Tape& t, ad::Var p) { return ad::sum(ad::square(ad::mul(c(t, {3, 1}, col), p))); }},
        {"broadcast-param",
         [&](ad::Tape& t, ad::Var p) {
           const ad::Var r = ad::slice_cols(ad::reshape(p, {1, 12}), 0, 4);
           return ad::sum(ad::square(ad::mul(c(t, s, other), r)));
         }},
        {"scale", [&](ad::Tape&, ad::Var p) { return ad::mean(ad::square(ad::add_scalar(ad::scale(p, -1.7), 0.3))); }},
        {"neg-exp", [&](ad::Tape&, ad::Var p) { return ad::sum(ad::exp(ad::neg(ad::scale(p, 0.5)))); }},
        {"matmul",
         [&](ad::Tape& t, ad::Var p) { return ad::sum(ad::square(ad::matmul(p, c(t, {4, 2}, w8)))); }},
        {"matmul_nt",
         [&](ad::Tape& t, ad::Var p) { return ad::sum(ad::square(ad::matmul_nt(c(t, {2, 4}, w8), p))); }},
        {"matvec",
         [&](ad::Tape& t, ad::Var p) {
           const ad::Var mats = ad::reshape(p, {1, 12});
           return ad::sum(ad::square(ad::matvec(mats, c(t, {2, 4}, w8), 3)));
         }},
        {"matvec-x",
         [&](ad::Tape& t, ad::Var p) {
           const ad::Var x2 = ad::reshape(p, {3, 4});
           return ad::sum(ad::square(ad::matvec(c(t, {3, 8}, w24), x2, 2)));
         }},
        {"abs", [&](ad::Tape&, ad::Var p) { return ad::sum(ad::abs(p)); }},
        {"elu", [&](ad::Tape&, ad::Var p) { return ad::sum(ad::square(ad::elu(p))); }},
        {"softplus", [&](ad::Tape&, ad::Var p) { return ad::sum(ad::square(ad::softplus(p))); }},
        {"max_const", [&](ad::Tape&, ad::Var p) { return ad::sum(ad::square(ad::max_const(p, 0.1))); }},
        {"concat",
         [&](ad::Tape& t, ad::Var p) {
           const std::vector<ad::Var> parts{p, c(t, {3, 1}, col), ad::scale(p, 2.0)};
           return ad::sum(ad::square(ad::concat_cols(parts)));
         }},
        {"denoise",
         [&](ad::Tape& t, ad::Var p) {
           const std::vector<double> levels{-0.9, -0.3, 0.3, 0.9};
           const ad::Var var = ad::add_scalar(ad::softplus(c(t, {1, 4}, row)), 0.05);
           return ad::sum(ad::square(ad::gaussian_denoise(p, var, levels)));
         }},
        {"denoise-var",
         [&](ad::Tape& t, ad::Var p) {
           const std::vector<double> levels{-0.7, 0.7};
           const ad::Var var = ad::softplus(ad::slice_cols(ad::reshape(p, {1, 12}), 0, 4));
           return ad::sum(ad::gaussian_denoise(c(t, s, other), var, levels));
         }},
    };
    for (const auto& [name, g] : graphs) {
      INFO(name);
      CHECK(check_graph(s, x, g) < 1e-6);
    }
  }
}

TEST_CASE("tape bookkeeping") {
  ad::Tape tape;
  const ad::Var p = tape.parameter({1, 2}, std::vector<double>{1, 2});
  const ad::Var unused = tape.parameter({1, 1}, std::vector<double>{5});
  const ad::Var k = tape.constant({1, 2}, std::vector<double>{3, 4});
  const ad::Var root = ad::sum(ad::mul(p, k));
  tape.backward(root);
  CHECK(tape.grad(p)[0] == 3.0);
  CHECK(tape.grad(p)[1] == 4.0);
  CHECK(tape.grad(unused)[0] == 0.0);
  CHECK_THROWS_AS(tape.grad(k), Error);
  CHECK_THROWS_AS(tape.backward(root), Error);

  ad::Tape t2;
  const ad::Var v = t2.parameter({2, 1}, std::vector<double>{1, 2});
  CHECK_THROWS_AS(t2.backward(v), Error);

  // a variable used twice accumulates both paths
  ad::Tape t3;
  const ad::Var x = t3.parameter({1, 1}, std::vector<double>{3});
  t3.backward(ad::mul(x, x));
  CHECK(t3.grad(x)[0] == 6.0);
}

}  // TEST_SUITE
