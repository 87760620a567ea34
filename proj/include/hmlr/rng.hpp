#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace hmlr {

// Seedable random stream. Child streams are derived by hashing
// (seed, key) so independent workers never share state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }

  // Independent stream keyed by `key`; does not advance this stream.
  Rng split(std::uint64_t key) const;

  std::uint64_t next_u64() { return engine_(); }
  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();
  // Circular complex Gaussian with E|z|^2 = variance.
  std::complex<double> complex_normal(double variance = 1.0);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t key);

}  // namespace hmlr
