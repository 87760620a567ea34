#include "hmlr/channel.hpp"

#include <cmath>
#include <string>

namespace hmlr {

namespace {

ComplexMatrix complexify(const RealMatrix& r) {
  ComplexMatrix c(r.rows(), r.cols());
  for (std::size_t i = 0; i < r.size(); ++i) c.data()[i] = r.data()[i];
  return c;
}

}  // namespace

void KroneckerConfig::validate() const {
  require(n_tx >= 1 && n_rx >= n_tx, ErrorKind::Domain, "kronecker: need n_rx >= n_tx >= 1");
  require(rho_k >= 0.0 && rho_k < 1.0, ErrorKind::Domain, "kronecker: rho_k must lie in [0, 1)");
}

void JakesConfig::validate() const {
  require(rho >= 0.0 && rho <= 1.0, ErrorKind::Domain, "jakes: rho must lie in [0, 1]");
}

NoiseModel NoiseModel::from_snr(double snr_db, std::size_t n_tx, std::size_t n_rx) {
  return NoiseModel{sigma2_for_snr(snr_db, n_tx, n_rx), snr_db};
}

RealMatrix exp_correlation_matrix(std::size_t n, double rho_k) {
  require(rho_k >= 0.0 && rho_k < 1.0, ErrorKind::Domain,
          "exp_correlation_matrix: rho_k must lie in [0, 1)");
  RealMatrix r(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const auto lag = static_cast<int>(i > j ? i - j : j - i);
      r(i, j) = std::pow(rho_k, lag);
    }
  return r;
}

ComplexMatrix sample_iid(std::size_t rows, std::size_t cols, Rng& rng) {
  ComplexMatrix h(rows, cols);
  for (auto& v : h.values()) v = rng.complex_normal(1.0);
  return h;
}

KroneckerSampler::KroneckerSampler(const KroneckerConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  rx_root_ = complexify(psd_sqrt(exp_correlation_matrix(cfg_.n_rx, cfg_.rho_k)));
  tx_root_ = complexify(psd_sqrt(exp_correlation_matrix(cfg_.n_tx, cfg_.rho_k)));
}

ComplexMatrix KroneckerSampler::operator()(Rng& rng) const {
  const ComplexMatrix he = sample_iid(cfg_.n_rx, cfg_.n_tx, rng);
  return rx_root_ * he * tx_root_;
}

ComplexMatrix sample_kronecker(const KroneckerConfig& cfg, Rng& rng) {
  return KroneckerSampler(cfg)(rng);
}

ComplexMatrix jakes_step(const ComplexMatrix& prev, double rho, Rng& rng) {
  require(rho >= 0.0 && rho <= 1.0, ErrorKind::Domain, "jakes_step: rho must lie in [0, 1]");
  const double innovation = std::sqrt(1.0 - rho * rho);
  ComplexMatrix next(prev.rows(), prev.cols());
  for (std::size_t i = 0; i < prev.size(); ++i) {
    // The innovation is always drawn so that streams stay aligned across rho values.
    const cdouble e = rng.complex_normal(1.0);
    next.data()[i] = rho * prev.data()[i] + innovation * e;
  }
  return next;
}

ChannelSequence jakes_sequence(const ComplexMatrix& h0, const JakesConfig& cfg, Rng& rng) {
  cfg.validate();
  ChannelSequence seq{h0, {}};
  seq.steps.reserve(cfg.horizon);
  const ComplexMatrix* prev = &seq.initial;
  for (std::size_t t = 0; t < cfg.horizon; ++t) {
    seq.steps.push_back(jakes_step(*prev, cfg.rho, rng));
    prev = &seq.steps.back();
  }
  return seq;
}

double sigma2_for_snr(double snr_db, std::size_t n_tx, std::size_t n_rx) {
  return static_cast<double>(n_tx) / (static_cast<double>(n_rx) * std::pow(10.0, snr_db / 10.0));
}

ComplexVector transmit(const ComplexMatrix& h, std::span<const cdouble> x, const NoiseModel& noise,
                       Rng& rng) {
  require(h.cols() == x.size(), ErrorKind::Dimension,
          "transmit: symbol vector length " + std::to_string(x.size()) + " != channel columns " +
              std::to_string(h.cols()));
  ComplexVector y = matvec(h, x);
  for (auto& v : y) v += rng.complex_normal(noise.sigma2);
  return y;
}

}  // namespace hmlr
