#pragma once

#include <cstddef>
#include <vector>

#include "hmlr/linalg.hpp"
#include "hmlr/rng.hpp"

namespace hmlr {

struct KroneckerConfig {
  std::size_t n_rx = 4;
  std::size_t n_tx = 2;
  double rho_k = 0.6;

  void validate() const;
};

struct JakesConfig {
  double rho = 0.98;
  std::size_t horizon = 4;

  void validate() const;
};

struct ChannelSequence {
  ComplexMatrix initial;
  std::vector<ComplexMatrix> steps;  // H_1 .. H_T

  std::size_t horizon() const noexcept { return steps.size(); }
  // t = 0 is the initial matrix.
  const ComplexMatrix& at(std::size_t t) const { return t == 0 ? initial : steps.at(t - 1); }

  bool operator==(const ChannelSequence&) const = default;
};

struct NoiseModel {
  double sigma2 = 1.0;  // total variance per complex entry
  double snr_db = 0.0;

  static NoiseModel from_snr(double snr_db, std::size_t n_tx, std::size_t n_rx);
};

// R_ij = rho_k^|i-j|
RealMatrix exp_correlation_matrix(std::size_t n, double rho_k);

// i.i.d. CN(0,1) entries
ComplexMatrix sample_iid(std::size_t rows, std::size_t cols, Rng& rng);

// Holds R_r^{1/2} and R_u^{1/2} so repeated draws skip the eigendecomposition.
class KroneckerSampler {
 public:
  explicit KroneckerSampler(const KroneckerConfig& cfg);

  ComplexMatrix operator()(Rng& rng) const;
  const KroneckerConfig& config() const noexcept { return cfg_; }

 private:
  KroneckerConfig cfg_;
  ComplexMatrix rx_root_;
  ComplexMatrix tx_root_;
};

ComplexMatrix sample_kronecker(const KroneckerConfig& cfg, Rng& rng);

// H_t = rho H_{t-1} + sqrt(1 - rho^2) E_t
ComplexMatrix jakes_step(const ComplexMatrix& prev, double rho, Rng& rng);
ChannelSequence jakes_sequence(const ComplexMatrix& h0, const JakesConfig& cfg, Rng& rng);

// SNR = N_u / (sigma^2 N_r)
double sigma2_for_snr(double snr_db, std::size_t n_tx, std::size_t n_rx);

// y = H x + n
ComplexVector transmit(const ComplexMatrix& h, std::span<const cdouble> x, const NoiseModel& noise,
                       Rng& rng);

}  // namespace hmlr
