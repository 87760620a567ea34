#include "hmlr/mmnet.hpp"

#include <cmath>
#include <string>

#include "hmlr/channel.hpp"
#include "hmlr/kernels.hpp"
#include "hmlr/optim.hpp"

namespace hmlr {

void SystemDims::validate() const {
  require(n_tx >= 1 && n_rx >= n_tx, ErrorKind::Config, "system: need n_rx >= n_tx >= 1");
  require(layers >= 1, ErrorKind::Config, "system: need at least one detector layer");
}

MmnetParams::MmnetParams(const SystemDims& dims) : dims_(dims), flat_(dims.param_count(), 0.0) {}

MmnetParams::MmnetParams(const SystemDims& dims, std::vector<double> flat) : dims_(dims), flat_(std::move(flat)) {
  require(flat_.size() == dims_.param_count(), ErrorKind::Dimension,
          "MmnetParams: expected " + std::to_string(dims_.param_count()) + " values, got " +
              std::to_string(flat_.size()));
}

MmnetParams MmnetParams::unflatten(const SystemDims& dims, std::span<const double> flat) {
  return MmnetParams(dims, std::vector<double>(flat.begin(), flat.end()));
}

std::span<const double> MmnetParams::a(std::size_t layer) const {
  return std::span<const double>(flat_).subspan(layer * dims_.per_layer(), dims_.a_size());
}
std::span<double> MmnetParams::a(std::size_t layer) {
  return std::span<double>(flat_).subspan(layer * dims_.per_layer(), dims_.a_size());
}
std::span<const double> MmnetParams::theta2(std::size_t layer) const {
  return std::span<const double>(flat_).subspan(layer * dims_.per_layer() + dims_.a_size(), dims_.tx_real());
}
std::span<double> MmnetParams::theta2(std::size_t layer) {
  return std::span<double>(flat_).subspan(layer * dims_.per_layer() + dims_.a_size(), dims_.tx_real());
}

DetectorInput DetectorInput::make(const ComplexMatrix& h, std::span<const cdouble> y, double sigma2) {
  require(h.rows() == y.size(), ErrorKind::Dimension, "DetectorInput: y length != channel rows");
  return DetectorInput{to_real_vector(y), to_real_composite(h), sigma2};
}

double denoise(double z, double sigma2_t, std::span<const double> levels) {
  return ad::gaussian_denoise_value(z, sigma2_t, levels);
}

RealVector mmnet_forward(const MmnetParams& w, const DetectorInput& in, const Constellation& c) {
  const SystemDims& d = w.dims();
  require(in.h_real.rows() == d.rx_real() && in.h_real.cols() == d.tx_real() && in.y_real.size() == d.rx_real(),
          ErrorKind::Dimension, "mmnet_forward: input does not match detector dimensions");
  const auto& kt = kernels::active();
  const auto levels = std::span<const double>(c.real_levels());
  RealVector x(d.tx_real(), 0.0);
  RealVector residual(d.rx_real());
  RealVector z(d.tx_real());
  for (std::size_t t = 0; t < d.layers; ++t) {
    for (std::size_t r = 0; r < d.rx_real(); ++r) {
      residual[r] = in.y_real[r] - kt.dot(in.h_real.data() + r * d.tx_real(), x.data(), d.tx_real());
    }
    const auto a = w.a(t);
    const auto th = w.theta2(t);
    for (std::size_t i = 0; i < d.tx_real(); ++i) {
      z[i] = x[i] + kt.dot(a.data() + i * d.rx_real(), residual.data(), d.rx_real());
    }
    for (std::size_t i = 0; i < d.tx_real(); ++i) x[i] = denoise(z[i], ad::softplus_value(th[i]), levels);
  }
  return x;
}

SymbolVector mmnet_detect(const MmnetParams& w, const DetectorInput& in, const Constellation& c) {
  return hard_decision_real(c, mmnet_forward(w, in, c));
}

std::vector<MmnetLayerVars> bind_mmnet(ad::Tape& tape, const MmnetParams& w) {
  const SystemDims& d = w.dims();
  std::vector<MmnetLayerVars> out;
  out.reserve(d.layers);
  for (std::size_t t = 0; t < d.layers; ++t) {
    out.push_back({tape.parameter({1, d.a_size()}, w.a(t)), tape.parameter({1, d.tx_real()}, w.theta2(t))});
  }
  return out;
}

std::vector<double> mmnet_gradient(ad::Tape& tape, std::span<const MmnetLayerVars> vars) {
  std::vector<double> g;
  for (const MmnetLayerVars& l : vars) {
    const auto ga = tape.grad(l.a);
    const auto gt = tape.grad(l.theta2);
    g.insert(g.end(), ga.begin(), ga.end());
    g.insert(g.end(), gt.begin(), gt.end());
  }
  return g;
}

std::vector<MmnetLayerVars> split_mmnet(ad::Var flat, const SystemDims& dims) {
  require(flat.shape().cols == dims.param_count(), ErrorKind::Dimension,
          "split_mmnet: expected " + std::to_string(dims.param_count()) + " columns");
  std::vector<MmnetLayerVars> out;
  out.reserve(dims.layers);
  for (std::size_t t = 0; t < dims.layers; ++t) {
    const std::size_t base = t * dims.per_layer();
    out.push_back({ad::slice_cols(flat, base, dims.a_size()), ad::slice_cols(flat, base + dims.a_size(), dims.tx_real())});
  }
  return out;
}

ad::Var mmnet_forward(std::span<const MmnetLayerVars> layers, ad::Var h_real, ad::Var y_real,
                      std::span<const double> levels, const SystemDims& dims) {
  require(layers.size() == dims.layers, ErrorKind::Dimension, "mmnet_forward: layer count mismatch");
  require(y_real.shape().cols == dims.rx_real(), ErrorKind::Dimension, "mmnet_forward: y width mismatch");
  ad::Tape& tape = y_real.tape();
  const std::size_t batch = y_real.shape().rows;
  ad::Var x = tape.constant({batch, dims.tx_real()}, std::vector<double>(batch * dims.tx_real(), 0.0));
  for (const MmnetLayerVars& layer : layers) {
    const ad::Var residual = ad::sub(y_real, ad::matvec(h_real, x, dims.rx_real()));
    const ad::Var z = ad::add(x, ad::matvec(layer.a, residual, dims.tx_real()));
    x = ad::gaussian_denoise(z, ad::softplus(layer.theta2), levels);
  }
  return x;
}

MmnetParams mmnet_init(const ComplexMatrix& h, const SystemDims& dims, double init_std, Rng& rng) {
  const RealMatrix hr = to_real_composite(h);
  require(hr.rows() == dims.rx_real() && hr.cols() == dims.tx_real(), ErrorKind::Dimension,
          "mmnet_init: channel does not match detector dimensions");
  double trace = 0.0;
  for (double v : hr.values()) trace += v * v;
  require(trace > 0.0, ErrorKind::Domain, "mmnet_init: zero channel");
  const double c = 1.0 / trace;
  const double theta0 = ad::softplus_inverse(1.0);

  MmnetParams w(dims);
  for (std::size_t t = 0; t < dims.layers; ++t) {
    auto a = w.a(t);
    for (std::size_t i = 0; i < dims.tx_real(); ++i)
      for (std::size_t r = 0; r < dims.rx_real(); ++r) a[i * dims.rx_real() + r] = c * hr(r, i) + init_std * rng.normal();
    for (double& v : w.theta2(t)) v = theta0;
  }
  return w;
}

FixedChannelBatch draw_fixed_channel_batch(const ComplexMatrix& h, std::size_t batch, double snr_min_db,
                                           double snr_max_db, const Constellation& c, Rng& rng) {
  FixedChannelBatch b;
  b.size = batch;
  const std::size_t nu = h.cols();
  const std::size_t nr = h.rows();
  b.x_real.reserve(batch * 2 * nu);
  b.y_real.reserve(batch * 2 * nr);
  for (std::size_t s = 0; s < batch; ++s) {
    const SymbolVector x = sample_symbols(c, nu, rng);
    const double snr = rng.uniform(snr_min_db, snr_max_db);
    const ComplexVector y = transmit(h, x.values, NoiseModel::from_snr(snr, nu, nr), rng);
    const RealVector xr = to_real_vector(x.values);
    const RealVector yr = to_real_vector(y);
    b.x_real.insert(b.x_real.end(), xr.begin(), xr.end());
    b.y_real.insert(b.y_real.end(), yr.begin(), yr.end());
  }
  return b;
}

namespace {

ad::Var batch_loss(ad::Tape& tape, std::span<const MmnetLayerVars> vars, const ComplexMatrix& h,
                   const FixedChannelBatch& batch, const Constellation& c, const SystemDims& d) {
  const RealMatrix hr = to_real_composite(h);
  const ad::Var hv = tape.constant({1, d.channel_real_size()}, hr.values());
  const ad::Var y = tape.constant({batch.size, d.rx_real()}, batch.y_real);
  const ad::Var x = tape.constant({batch.size, d.tx_real()}, batch.x_real);
  const ad::Var xhat = mmnet_forward(vars, hv, y, c.real_levels(), d);
  return ad::scale(ad::sum(ad::square(ad::sub(xhat, x))), 1.0 / static_cast<double>(batch.size));
}

}  // namespace

double mmnet_batch_loss(const MmnetParams& w, const ComplexMatrix& h, const FixedChannelBatch& batch,
                        const Constellation& c) {
  ad::Tape tape;
  const auto vars = bind_mmnet(tape, w);
  return batch_loss(tape, vars, h, batch, c, w.dims()).item();
}

PretrainResult pretrain_mmnet(const ComplexMatrix& h, const PretrainConfig& cfg, const SystemDims& dims,
                              const Constellation& c, Rng& rng) {
  dims.validate();
  require(cfg.batch >= 1, ErrorKind::Config, "pretrain: batch must be positive");
  Rng init_rng = rng.split(0);
  const Rng eval_rng = rng.split(1);
  Rng eval_draw = eval_rng;
  const FixedChannelBatch eval = draw_fixed_channel_batch(h, cfg.eval_batch, cfg.snr_min_db, cfg.snr_max_db, c, eval_draw);

  PretrainResult result{mmnet_init(h, dims, cfg.init_std, init_rng), 0.0, 0.0};
  result.initial_loss = mmnet_batch_loss(result.params, h, eval, c);

  AdamState adam = AdamState::init(dims.param_count(), AdamConfig{cfg.lr});
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    Rng draw = rng.split(2 + it);
    const FixedChannelBatch batch = draw_fixed_channel_batch(h, cfg.batch, cfg.snr_min_db, cfg.snr_max_db, c, draw);
    ad::Tape tape;
    const auto vars = bind_mmnet(tape, result.params);
    const ad::Var loss = batch_loss(tape, vars, h, batch, c, dims);
    if (!std::isfinite(loss.item())) {
      fail(ErrorKind::Divergence, "pretrain: non-finite loss at iteration " + std::to_string(it));
    }
    tape.backward(loss);
    const std::vector<double> g = mmnet_gradient(tape, vars);
    adam_step(result.params.flat(), g, adam);
  }
  result.final_loss = mmnet_batch_loss(result.params, h, eval, c);
  if (!std::isfinite(result.final_loss)) fail(ErrorKind::Divergence, "pretrain: non-finite final loss");
  return result;
}

}  // namespace hmlr
