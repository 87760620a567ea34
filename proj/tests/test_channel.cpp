#include <cmath>
#include <set>

#include "doctest.h"
#include "hmlr/channel.hpp"
#include "hmlr/errors.hpp"
#include "hmlr/rng.hpp"

using namespace hmlr;

TEST_SUITE("rng") {

TEST_CASE("streams are reproducible and split independently") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  const Rng root(42);
  CHECK(root.split(1).seed() == root.split(1).seed());
  std::set<std::uint64_t> seeds;
  for (std::uint64_t k = 0; k < 1000; ++k) seeds.insert(root.split(k).seed());
  CHECK(seeds.size() == 1000);
  CHECK(root.split(1).seed() != Rng(43).split(1).seed());
}

TEST_CASE("moments of the basic draws") {
  Rng rng(7);
  const int n = 200000;
  double s = 0, s2 = 0, u = 0, c2 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
    u += rng.uniform();
    c2 += std::norm(rng.complex_normal(2.0));
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(s2 / n - 1.0) < 0.015);
  CHECK(std::abs(u / n - 0.5) < 0.005);
  CHECK(std::abs(c2 / n - 2.0) < 0.03);
  for (int i = 0; i < 1000; ++i) CHECK(rng.below(7) < 7);
}

}  // TEST_SUITE

TEST_SUITE("channel") {

TEST_CASE("exponential correlation template") {
  const RealMatrix r = exp_correlation_matrix(3, 0.6);
  CHECK(r(0, 0) == 1.0);
  CHECK(r(0, 1) == doctest::Approx(0.6));
  CHECK(r(0, 2) == doctest::Approx(0.36));
  CHECK(r(2, 1) == doctest::Approx(0.6));
  CHECK(exp_correlation_matrix(2, 0.0) == RealMatrix::identity(2));
  CHECK_THROWS_AS(exp_correlation_matrix(2, 1.0), Error);
}

TEST_CASE("noise level for a given SNR") {
  CHECK(sigma2_for_snr(10.0, 2, 4) == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(sigma2_for_snr(5.0, 2, 4) == doctest::Approx(0.158113883).epsilon(1e-9));
  CHECK(sigma2_for_snr(0.0, 4, 4) == doctest::Approx(1.0));
  const NoiseModel nm = NoiseModel::from_snr(10.0, 2, 4);
  CHECK(nm.snr_db == 10.0);
  CHECK(nm.sigma2 == sigma2_for_snr(10.0, 2, 4));
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS((KroneckerConfig{4, 2, 1.0}.validate()), Error);
  CHECK_THROWS_AS((KroneckerConfig{2, 4, 0.5}.validate()), Error);
  CHECK_THROWS_AS((JakesConfig{1.5, 4}.validate()), Error);
  CHECK_NOTHROW((JakesConfig{1.0, 0}.validate()));
}

TEST_CASE("Jakes sequences") {
  Rng rng(9);
  const ComplexMatrix h0 = sample_kronecker(KroneckerConfig{}, rng);
  const ChannelSequence seq = jakes_sequence(h0, JakesConfig{0.98, 4}, rng);
  CHECK(seq.horizon() == 4);
  CHECK(seq.at(0) == h0);
  CHECK(seq.at(4).rows() == 4);
  CHECK_THROWS(seq.at(5));

  const ChannelSequence only = jakes_sequence(h0, JakesConfig{0.98, 0}, rng);
  CHECK(only.horizon() == 0);
  CHECK(only.at(0) == h0);

  const ChannelSequence frozen = jakes_sequence(h0, JakesConfig{1.0, 3}, rng);
  for (std::size_t t = 0; t <= 3; ++t) CHECK(frozen.at(t) == h0);

  // rho = 0: each step is a fresh i.i.d. draw with the same stream.
  Rng r1(5), r2(5);
  CHECK(jakes_step(h0, 0.0, r1) == sample_iid(4, 2, r2));
}

TEST_CASE("sampling is a pure function of the seed") {
  Rng a(77), b(77);
  const KroneckerSampler sampler(KroneckerConfig{});
  CHECK(sampler(a) == sample_kronecker(KroneckerConfig{}, b));
  // rho_k = 0 reduces to i.i.d. entries.
  Rng c(3), d(3);
  CHECK(sample_kronecker(KroneckerConfig{4, 2, 0.0}, c) == sample_iid(4, 2, d));
}

TEST_CASE("received noise has the configured variance") {
  Rng rng(1234);
  const ComplexMatrix h = sample_iid(4, 2, rng);
  const ComplexVector zero(2);
  const NoiseModel nm{0.3, 0.0};
  const int n = 25000;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    for (const cdouble& v : transmit(h, zero, nm, rng)) acc += std::norm(v);
  }
  CHECK(acc / (4.0 * n) == doctest::Approx(0.3).epsilon(0.02));

  const ComplexVector x{cdouble(1, 0), cdouble(0, 1)};
  const ComplexVector clean = transmit(h, x, NoiseModel{0.0, 0.0}, rng);
  const ComplexVector expect = matvec(h, x);
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(clean[i] - expect[i]) < 1e-15);
  try {
    transmit(h, ComplexVector(3), nm, rng);
    FAIL("expected Dimension");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Dimension);
  }
}

}  // TEST_SUITE
