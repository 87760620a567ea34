#pragma once

// Hypernetwork training with the bank-anchored l1 regulariser:
//
//   L(Theta) = E ||x - x_hat||^2  +  beta * sum_i ||W_i^M - g(H_i, sigma_i^2; Theta)||_1
//              `---- loss_a ----'     `------------------ loss_b ------------------'
//
// beta = 0 (or an empty bank) is plain HyperMIMO training.

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "hmlr/bank.hpp"
#include "hmlr/channel.hpp"
#include "hmlr/hypernet.hpp"
#include "hmlr/optim.hpp"

namespace hmlr {

struct TrainConfig {
  double beta = 1.0;
  std::size_t batch_channels = 100;
  std::size_t draws_per_channel = 1;
  std::size_t iterations = 50000;
  double snr_min_db = 5.0;
  double snr_max_db = 10.0;
  AdamConfig adam;
  SchedulerConfig scheduler;

  void validate() const;
  bool operator==(const TrainConfig& o) const;
};

struct TrainingSample {
  ComplexMatrix h;
  ComplexVector x;
  ComplexVector y;
  double sigma2 = 0.0;
};

// batch_channels fresh Kronecker channels, draws_per_channel (x, n, SNR) each.
std::vector<TrainingSample> draw_training_batch(const KroneckerSampler& channels, const Constellation& c,
                                                const TrainConfig& cfg, Rng& rng);

// Mean over the batch of the squared error between the true real-composite
// symbols and the soft detector output.
ad::Var loss_a(std::span<const ad::Var> bound, const HypernetConfig& cfg, std::span<const TrainingSample> batch,
               const Constellation& c);
// beta * sum over entries and parameters of |W^M - W^H|; W^H evaluated at each entry's sigma2_ref.
ad::Var loss_b(std::span<const ad::Var> bound, const HypernetConfig& cfg, const ModelBank& bank, double beta);

double loss_a(const HypernetParams& theta, std::span<const TrainingSample> batch, const Constellation& c);
double loss_b(const HypernetParams& theta, const ModelBank& bank, double beta);

struct TrainLogRow {
  std::size_t iteration;  // iterations completed
  double loss_total;      // means over the check window
  double loss_a;
  double loss_b;
  double lr;              // rate after the scheduler update
};

struct TrainResult {
  HypernetParams theta;
  std::vector<TrainLogRow> log;
};

// `bank` may be empty; beta > 0 then is rejected.
TrainResult train(const HypernetParams& theta0, const TrainConfig& cfg, const ModelBank& bank,
                  const KroneckerConfig& channel_cfg, const Constellation& c, Rng& rng,
                  const std::function<void(const TrainLogRow&)>& on_check = {});

void write_train_log_csv(std::ostream& out, std::span<const TrainLogRow> log);

}  // namespace hmlr
