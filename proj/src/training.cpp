#include "hmlr/training.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include <fmt/format.h>

namespace hmlr {

void TrainConfig::validate() const {
  require(beta >= 0.0 && std::isfinite(beta), ErrorKind::Config, "train: beta must be finite and >= 0");
  require(batch_channels >= 1 && draws_per_channel >= 1, ErrorKind::Config, "train: batch sizes must be positive");
  require(snr_min_db <= snr_max_db, ErrorKind::Config, "train: empty SNR range");
  require(adam.lr > 0.0, ErrorKind::Config, "train: learning rate must be positive");
}

bool TrainConfig::operator==(const TrainConfig& o) const {
  return beta == o.beta && batch_channels == o.batch_channels && draws_per_channel == o.draws_per_channel &&
         iterations == o.iterations && snr_min_db == o.snr_min_db && snr_max_db == o.snr_max_db &&
         adam.lr == o.adam.lr && adam.beta1 == o.adam.beta1 && adam.beta2 == o.adam.beta2 &&
         adam.eps == o.adam.eps && scheduler.check_interval == o.scheduler.check_interval &&
         scheduler.factor == o.scheduler.factor && scheduler.floor == o.scheduler.floor &&
         scheduler.patience == o.scheduler.patience && scheduler.threshold == o.scheduler.threshold;
}

std::vector<TrainingSample> draw_training_batch(const KroneckerSampler& channels, const Constellation& c,
                                                const TrainConfig& cfg, Rng& rng) {
  const KroneckerConfig& kc = channels.config();
  std::vector<TrainingSample> batch;
  batch.reserve(cfg.batch_channels * cfg.draws_per_channel);
  for (std::size_t k = 0; k < cfg.batch_channels; ++k) {
    const ComplexMatrix h = channels(rng);
    for (std::size_t d = 0; d < cfg.draws_per_channel; ++d) {
      const SymbolVector x = sample_symbols(c, kc.n_tx, rng);
      const NoiseModel noise = NoiseModel::from_snr(rng.uniform(cfg.snr_min_db, cfg.snr_max_db), kc.n_tx, kc.n_rx);
      ComplexVector y = transmit(h, x.values, noise, rng);
      batch.push_back({h, x.values, std::move(y), noise.sigma2});
    }
  }
  return batch;
}

ad::Var loss_a(std::span<const ad::Var> bound, const HypernetConfig& cfg, std::span<const TrainingSample> batch,
               const Constellation& c) {
  require(!batch.empty(), ErrorKind::Domain, "loss_a: empty batch");
  const SystemDims& d = cfg.dims;
  const std::size_t b = batch.size();
  std::vector<double> features, h_real, y_real, x_real;
  features.reserve(b * cfg.input_dim());
  h_real.reserve(b * d.channel_real_size());
  y_real.reserve(b * d.rx_real());
  x_real.reserve(b * d.tx_real());
  for (const TrainingSample& s : batch) {
    const RealVector f = hypernet_features(s.h, s.sigma2);
    const RealMatrix hr = to_real_composite(s.h);
    const RealVector yr = to_real_vector(s.y);
    const RealVector xr = to_real_vector(s.x);
    features.insert(features.end(), f.begin(), f.end());
    h_real.insert(h_real.end(), hr.values().begin(), hr.values().end());
    y_real.insert(y_real.end(), yr.begin(), yr.end());
    x_real.insert(x_real.end(), xr.begin(), xr.end());
  }
  ad::Tape& tape = bound.front().tape();
  const ad::Var generated = hypernet_forward(bound, tape.constant({b, cfg.input_dim()}, std::move(features)), cfg);
  const auto layers = split_mmnet(generated, d);
  const ad::Var xhat = mmnet_forward(layers, tape.constant({b, d.channel_real_size()}, std::move(h_real)),
                                     tape.constant({b, d.rx_real()}, std::move(y_real)), c.real_levels(), d);
  const ad::Var err = ad::sub(xhat, tape.constant({b, d.tx_real()}, std::move(x_real)));
  return ad::scale(ad::sum(ad::square(err)), 1.0 / static_cast<double>(b));
}

ad::Var loss_b(std::span<const ad::Var> bound, const HypernetConfig& cfg, const ModelBank& bank, double beta) {
  require(!bank.entries.empty(), ErrorKind::Domain, "loss_b: empty bank");
  const std::size_t n = bank.size();
  const std::size_t p = cfg.output_dim();
  std::vector<double> features, targets;
  features.reserve(n * cfg.input_dim());
  targets.reserve(n * p);
  for (const BankEntry& e : bank.entries) {
    require(e.params.dims() == cfg.dims, ErrorKind::Dimension, "loss_b: bank entry dimensions differ from hypernetwork");
    const RealVector f = hypernet_features(e.channel, e.sigma2_ref);
    features.insert(features.end(), f.begin(), f.end());
    targets.insert(targets.end(), e.params.flat().begin(), e.params.flat().end());
  }
  ad::Tape& tape = bound.front().tape();
  const ad::Var generated = hypernet_forward(bound, tape.constant({n, cfg.input_dim()}, std::move(features)), cfg);
  const ad::Var diff = ad::sub(tape.constant({n, p}, std::move(targets)), generated);
  return ad::scale(ad::sum(ad::abs(diff)), beta);
}

double loss_a(const HypernetParams& theta, std::span<const TrainingSample> batch, const Constellation& c) {
  ad::Tape tape;
  const auto bound = theta.store().bind(tape);
  return loss_a(bound, theta.config(), batch, c).item();
}

double loss_b(const HypernetParams& theta, const ModelBank& bank, double beta) {
  ad::Tape tape;
  const auto bound = theta.store().bind(tape);
  return loss_b(bound, theta.config(), bank, beta).item();
}

TrainResult train(const HypernetParams& theta0, const TrainConfig& cfg, const ModelBank& bank,
                  const KroneckerConfig& channel_cfg, const Constellation& c, Rng& rng,
                  const std::function<void(const TrainLogRow&)>& on_check) {
  cfg.validate();
  const bool use_bank = cfg.beta > 0.0;
  require(!use_bank || !bank.entries.empty(), ErrorKind::Config, "train: beta > 0 requires a non-empty bank");
  require(channel_cfg.n_rx == theta0.config().dims.n_rx && channel_cfg.n_tx == theta0.config().dims.n_tx,
          ErrorKind::Dimension, "train: channel model does not match hypernetwork dimensions");

  const KroneckerSampler channels(channel_cfg);
  TrainResult result{theta0, {}};
  AdamState adam = AdamState::init(theta0.size(), cfg.adam);
  PlateauScheduler scheduler(cfg.adam.lr, cfg.scheduler);

  double win_total = 0.0, win_a = 0.0, win_b = 0.0;
  std::size_t win_count = 0;
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    for (double v : result.theta.flat()) {
      if (!std::isfinite(v)) fail(ErrorKind::Divergence, fmt::format("train: non-finite parameter at iteration {}", it));
    }
    Rng draw = rng.split(it);
    const std::vector<TrainingSample> batch = draw_training_batch(channels, c, cfg, draw);

    ad::Tape tape;
    const auto bound = result.theta.store().bind(tape);
    const ad::Var la = loss_a(bound, result.theta.config(), batch, c);
    ad::Var total = la;
    double lb_value = 0.0;
    if (use_bank) {
      const ad::Var lb = loss_b(bound, result.theta.config(), bank, cfg.beta);
      lb_value = lb.item();
      total = ad::add(la, lb);
    }
    if (!std::isfinite(total.item())) {
      fail(ErrorKind::Divergence, fmt::format("train: non-finite loss at iteration {}", it));
    }
    tape.backward(total);
    const std::vector<double> grad = result.theta.store().gradient(tape, bound);
    adam_step(result.theta.flat(), grad, adam);

    win_total += total.item();
    win_a += la.item();
    win_b += lb_value;
    ++win_count;
    if ((it + 1) % cfg.scheduler.check_interval == 0 || it + 1 == cfg.iterations) {
      const double n = static_cast<double>(win_count);
      TrainLogRow row{it + 1, win_total / n, win_a / n, win_b / n, adam.lr};
      // Partial trailing windows are logged but do not drive the scheduler.
      if ((it + 1) % cfg.scheduler.check_interval == 0) {
        adam.lr = scheduler.update(row.loss_total);
        row.lr = adam.lr;
      }
      result.log.push_back(row);
      if (on_check) on_check(row);
      win_total = win_a = win_b = 0.0;
      win_count = 0;
    }
  }
  return result;
}

void write_train_log_csv(std::ostream& out, std::span<const TrainLogRow> log) {
  out << "iteration,loss_total,loss_a,loss_b,lr\n";
  for (const TrainLogRow& r : log) {
    out << fmt::format("{},{:.10g},{:.10g},{:.10g},{:.10g}\n", r.iteration, r.loss_total, r.loss_a, r.loss_b, r.lr);
  }
}

}  // namespace hmlr
