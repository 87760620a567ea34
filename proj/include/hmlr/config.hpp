#pragma once

// Experiment configuration: a sectioned key = value file.
//
//   [system]      n_rx, n_tx, constellation, layers
//   [channel]     rho_k, rho, horizon
//   [hypernet]    hidden, output_gain, output_bias
//   [training]    beta, batch_channels, draws_per_channel, iterations, snr_min_db, snr_max_db,
//                 lr_init, adam_beta1, adam_beta2, adam_eps, check_interval, lr_factor, lr_floor,
//                 patience, threshold
//   [bank]        n_sequences, pretrain_iterations, pretrain_batch, pretrain_lr, pretrain_snr_min_db,
//                 pretrain_snr_max_db, pretrain_init_std, pretrain_eval_batch
//   [evaluation]  n_test_sequences, snr_grid_db (comma list), trials_per_channel, hop_snr_db, ml_cap
//   [run]         seed, workers
//   [paths]       channels, bank, hypermimo, hypermimo_lr, results (relative to the output directory)
//
// Missing keys keep their defaults; unknown sections or keys are rejected.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hmlr/channel.hpp"
#include "hmlr/hypernet.hpp"
#include "hmlr/mmnet.hpp"
#include "hmlr/training.hpp"

namespace hmlr {

struct EvaluationConfig {
  std::size_t n_test_sequences = 100;
  std::vector<double> snr_grid_db{5.0, 6.0, 7.0, 8.0, 9.0, 10.0};
  std::size_t trials_per_channel = 20;
  std::vector<double> hop_snr_db{5.0, 10.0};
  std::size_t ml_cap = std::size_t{1} << 20;

  bool operator==(const EvaluationConfig&) const = default;
};

struct PathsConfig {
  std::string channels = "channels";
  std::string bank = "bank";
  std::string hypermimo = "hypermimo";
  std::string hypermimo_lr = "hypermimo_lr";
  std::string results = "results";

  bool operator==(const PathsConfig&) const = default;
};

struct ExperimentConfig {
  SystemDims system;
  std::size_t constellation_order = 4;
  double rho_k = 0.6;
  JakesConfig jakes;
  HypernetConfig hypernet;  // dims mirror `system` after finalize()
  TrainConfig training;
  std::size_t bank_sequences = 140;
  PretrainConfig pretrain;
  EvaluationConfig evaluation;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  PathsConfig paths;

  KroneckerConfig kronecker() const { return KroneckerConfig{system.n_rx, system.n_tx, rho_k}; }
  // Propagates `system` into the nested configs and validates everything.
  void finalize();
  bool operator==(const ExperimentConfig&) const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string emit_config(const ExperimentConfig& cfg);

}  // namespace hmlr
