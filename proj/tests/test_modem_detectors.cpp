#include <cmath>
#include <limits>

#include "doctest.h"
#include "hmlr/channel.hpp"
#include "hmlr/detectors.hpp"
#include "hmlr/errors.hpp"
#include "hmlr/modem.hpp"

using namespace hmlr;

TEST_SUITE("modem") {

TEST_CASE("QAM levels and unit power") {
  const Constellation q4 = make_qam(4);
  REQUIRE(q4.levels_per_axis() == 2);
  CHECK(q4.real_levels()[0] == doctest::Approx(-1.0 / std::sqrt(2.0)));
  CHECK(q4.real_levels()[1] == doctest::Approx(1.0 / std::sqrt(2.0)));

  const Constellation q16 = make_qam(16);
  const double s = std::sqrt(10.0);
  REQUIRE(q16.levels_per_axis() == 4);
  CHECK(q16.real_levels()[0] == doctest::Approx(-3.0 / s));
  CHECK(q16.real_levels()[1] == doctest::Approx(-1.0 / s));
  CHECK(q16.real_levels()[2] == doctest::Approx(1.0 / s));
  CHECK(q16.real_levels()[3] == doctest::Approx(3.0 / s));

  for (std::size_t k : {4u, 16u, 64u}) {
    const Constellation c = make_qam(k);
    double power = 0.0;
    for (const cdouble& p : c.points()) power += std::norm(p);
    CHECK(power / static_cast<double>(k) == doctest::Approx(1.0).epsilon(1e-14));
  }
  try {
    make_qam(8);
    FAIL("expected Unsupported");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Unsupported);
  }
}

TEST_CASE("index layout and nearest level") {
  const Constellation c = make_qam(16);
  const cdouble p = c.points()[c.index_of(1, 3)];
  CHECK(p.real() == c.real_levels()[1]);
  CHECK(p.imag() == c.real_levels()[3]);
  CHECK(c.nearest_level(-100.0) == 0);
  CHECK(c.nearest_level(100.0) == 3);
  CHECK(c.nearest_level(0.0) == 1);  // tie between levels 1 and 2 goes low
  CHECK(c.nearest_level(1e-12) == 2);
}

TEST_CASE("hard decisions and error counting") {
  const Constellation c = make_qam(4);
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    const SymbolVector x = sample_symbols(c, 3, rng);
    CHECK(hard_decision(c, x.values).indices == x.indices);
    CHECK(hard_decision_real(c, to_real_vector(x.values)).indices == x.indices);
    CHECK(symbol_errors(x, x) == 0);
  }
  const SymbolVector a = symbols_from_indices(c, {0, 1, 2, 3});
  const SymbolVector b = symbols_from_indices(c, {0, 2, 2, 0});
  CHECK(symbol_errors(a, b) == 2);
  const std::vector<SymbolVector> truth{a, a};
  const std::vector<SymbolVector> est{a, b};
  CHECK(ser(truth, est) == doctest::Approx(2.0 / 8.0));
  CHECK_THROWS_AS(symbols_from_indices(c, {4}), Error);
}

TEST_CASE("uniform symbol draws") {
  const Constellation c = make_qam(4);
  Rng rng(8);
  std::vector<int> hist(4, 0);
  const int n = 40000;
  for (int i = 0; i < n; ++i) ++hist[sample_symbols(c, 1, rng).indices[0]];
  for (int h : hist) CHECK(std::abs(h - n / 4) < 5 * std::sqrt(n * 0.25 * 0.75));
}

}  // TEST_SUITE

TEST_SUITE("detectors") {

namespace {

// Brute-force argmin over every candidate, written independently of detect_ml.
std::vector<std::size_t> brute_ml(const ComplexMatrix& h, const ComplexVector& y, const Constellation& c) {
  const std::size_t k = c.order();
  std::vector<std::size_t> best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      double cost = 0.0;
      for (std::size_t r = 0; r < h.rows(); ++r) {
        const cdouble e = y[r] - h(r, 0) * c.points()[i] - h(r, 1) * c.points()[j];
        cost += std::norm(e);
      }
      if (cost < best_cost) {
        best_cost = cost;
        best = {i, j};
      }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("noise-free recovery") {
  const Constellation c = make_qam(16);
  Rng rng(21);
  for (int i = 0; i < 20; ++i) {
    const ComplexMatrix h = sample_kronecker(KroneckerConfig{}, rng);
    const SymbolVector x = sample_symbols(c, 2, rng);
    const DetectionProblem p{matvec(h, x.values), h, 1e-9, c};
    CHECK(detect_zf(p).indices == x.indices);
    CHECK(detect_mmse(p).indices == x.indices);
    CHECK(detect_ml(p).indices == x.indices);
    CHECK(ml_objective(p, x.values) < 1e-25);
  }
}

TEST_CASE("ML equals an independent exhaustive search") {
  const Constellation c = make_qam(16);
  Rng rng(22);
  for (int i = 0; i < 40; ++i) {
    const ComplexMatrix h = sample_kronecker(KroneckerConfig{}, rng);
    const SymbolVector x = sample_symbols(c, 2, rng);
    const NoiseModel nm = NoiseModel::from_snr(5.0, 2, 4);
    const ComplexVector y = transmit(h, x.values, nm, rng);
    const DetectionProblem p{y, h, nm.sigma2, c};
    const SymbolVector ml = detect_ml(p);
    CHECK(ml.indices == brute_ml(h, y, c));
    CHECK(ml_objective(p, ml.values) <= ml_objective(p, detect_mmse(p).values) + 1e-12);
    CHECK(ml_objective(p, ml.values) <= ml_objective(p, detect_zf(p).values) + 1e-12);
  }
}

TEST_CASE("MMSE matches its closed form") {
  const Constellation c = make_qam(4);
  Rng rng(4);
  const ComplexMatrix h = sample_kronecker(KroneckerConfig{}, rng);
  const SymbolVector x = sample_symbols(c, 2, rng);
  const NoiseModel nm = NoiseModel::from_snr(0.0, 2, 4);
  const ComplexVector y = transmit(h, x.values, nm, rng);
  // 2x2 complex solve of (H^H H + s I) x = H^H y by Cramer's rule.
  const ComplexMatrix g = adjoint(h) * h;
  const ComplexVector b = matvec(adjoint(h), y);
  const cdouble a00 = g(0, 0) + nm.sigma2, a11 = g(1, 1) + nm.sigma2, a01 = g(0, 1), a10 = g(1, 0);
  const cdouble det = a00 * a11 - a01 * a10;
  const ComplexVector xhat{(b[0] * a11 - a01 * b[1]) / det, (a00 * b[1] - a10 * b[0]) / det};
  CHECK(detect_mmse(DetectionProblem{y, h, nm.sigma2, c}).indices == hard_decision(c, xhat).indices);
}

TEST_CASE("search space cap and shape checks") {
  const Constellation c = make_qam(64);
  Rng rng(1);
  const ComplexMatrix h = sample_iid(8, 4, rng);
  const DetectionProblem big{ComplexVector(8), h, 0.1, c};
  try {
    detect_ml(big);  // 64^4 = 2^24 candidates
    FAIL("expected SearchSpaceTooLarge");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SearchSpaceTooLarge);
  }
  const DetectionProblem bad{ComplexVector(3), sample_iid(4, 2, rng), 0.1, make_qam(4)};
  CHECK_THROWS_AS(detect_zf(bad), Error);
}

}  // TEST_SUITE
