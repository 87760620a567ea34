#pragma once

// Channel-specific unrolled detector. Each layer applies a learned linear
// correction followed by an elementwise Gaussian-posterior denoiser:
//
//   z_t     = x_t + A_t (y - H x_t)
//   x_{t+1} = denoise(z_t, softplus(theta2_t))
//
// starting from x_0 = 0, all in the real-composite domain.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "hmlr/autodiff.hpp"
#include "hmlr/linalg.hpp"
#include "hmlr/modem.hpp"
#include "hmlr/rng.hpp"

namespace hmlr {

struct SystemDims {
  std::size_t n_rx = 4;
  std::size_t n_tx = 2;
  std::size_t layers = 6;

  std::size_t rx_real() const noexcept { return 2 * n_rx; }
  std::size_t tx_real() const noexcept { return 2 * n_tx; }
  std::size_t a_size() const noexcept { return tx_real() * rx_real(); }
  std::size_t per_layer() const noexcept { return a_size() + tx_real(); }
  std::size_t param_count() const noexcept { return layers * per_layer(); }
  std::size_t channel_real_size() const noexcept { return rx_real() * tx_real(); }

  void validate() const;
  bool operator==(const SystemDims&) const = default;
};

// Flat storage in the persisted order: layer-major; within a layer the
// 2N_u x 2N_r matrix A row-major, then the 2N_u denoiser parameters.
class MmnetParams {
 public:
  MmnetParams() = default;
  explicit MmnetParams(const SystemDims& dims);
  MmnetParams(const SystemDims& dims, std::vector<double> flat);

  static MmnetParams unflatten(const SystemDims& dims, std::span<const double> flat);
  std::vector<double> flatten() const { return flat_; }

  const SystemDims& dims() const noexcept { return dims_; }
  std::span<const double> flat() const noexcept { return flat_; }
  std::span<double> flat() noexcept { return flat_; }

  std::span<const double> a(std::size_t layer) const;
  std::span<double> a(std::size_t layer);
  std::span<const double> theta2(std::size_t layer) const;
  std::span<double> theta2(std::size_t layer);

  bool operator==(const MmnetParams&) const = default;

 private:
  SystemDims dims_;
  std::vector<double> flat_;
};

struct DetectorInput {
  RealVector y_real;    // 2N_r
  RealMatrix h_real;    // 2N_r x 2N_u
  double sigma2 = 0.0;

  static DetectorInput make(const ComplexMatrix& h, std::span<const cdouble> y, double sigma2);
};

double denoise(double z, double sigma2_t, std::span<const double> levels);

// Soft estimate, length 2N_u.
RealVector mmnet_forward(const MmnetParams& w, const DetectorInput& in, const Constellation& c);
SymbolVector mmnet_detect(const MmnetParams& w, const DetectorInput& in, const Constellation& c);

struct MmnetLayerVars {
  ad::Var a;       // (B or 1) x a_size
  ad::Var theta2;  // (B or 1) x 2N_u
};

std::vector<MmnetLayerVars> bind_mmnet(ad::Tape& tape, const MmnetParams& w);
std::vector<double> mmnet_gradient(ad::Tape& tape, std::span<const MmnetLayerVars> vars);
// Splits a B x P tensor of generated parameters into per-layer views.
std::vector<MmnetLayerVars> split_mmnet(ad::Var flat, const SystemDims& dims);

// Batched differentiable forward. h_real is (B or 1) x (2N_r*2N_u) holding
// row-major composite channels; y_real is B x 2N_r. Returns B x 2N_u.
ad::Var mmnet_forward(std::span<const MmnetLayerVars> layers, ad::Var h_real, ad::Var y_real,
                      std::span<const double> levels, const SystemDims& dims);

struct PretrainConfig {
  std::size_t iterations = 1000;
  std::size_t batch = 500;
  double lr = 1e-3;
  double snr_min_db = 5.0;
  double snr_max_db = 10.0;
  double init_std = 0.01;
  std::size_t eval_batch = 2000;  // fixed batch for the start/end loss comparison

  bool operator==(const PretrainConfig&) const = default;
};

// Matched-filter warm start: A_t = H_r^T / trace(H_r^T H_r) + N(0, init_std^2),
// softplus(theta2) = 1.
MmnetParams mmnet_init(const ComplexMatrix& h, const SystemDims& dims, double init_std, Rng& rng);

// One batch of (x, y) draws on a fixed channel with SNR ~ U[min, max] dB.
struct FixedChannelBatch {
  RealVector x_real;  // B x 2N_u
  RealVector y_real;  // B x 2N_r
  std::size_t size = 0;
};
FixedChannelBatch draw_fixed_channel_batch(const ComplexMatrix& h, std::size_t batch, double snr_min_db,
                                           double snr_max_db, const Constellation& c, Rng& rng);

// Mean over the batch of ||x - x_hat||^2.
double mmnet_batch_loss(const MmnetParams& w, const ComplexMatrix& h, const FixedChannelBatch& batch,
                        const Constellation& c);

struct PretrainResult {
  MmnetParams params;
  double initial_loss = 0.0;  // on a fixed evaluation batch
  double final_loss = 0.0;
};

PretrainResult pretrain_mmnet(const ComplexMatrix& h, const PretrainConfig& cfg, const SystemDims& dims,
                              const Constellation& c, Rng& rng);

}  // namespace hmlr
