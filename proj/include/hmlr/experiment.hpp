#pragma once

// Experiment stages. Each stage reads its inputs from and writes its
// artifacts under one output directory:
//
//   <out>/<paths.channels>/       H0 + test sequences (channel-set archive)
//   <out>/<paths.bank>/           pretrained detector bank
//   <out>/<paths.hypermimo>/      hypernetwork trained with beta = 0 (+ train_log.csv)
//   <out>/<paths.hypermimo_lr>/   hypernetwork trained with beta > 0 (+ train_log.csv)
//   <out>/pretrain_one/           single-entry bank holding the MMNet pretrained on H0
//   <out>/<paths.results>/        ser_vs_snr.csv, ser_vs_hop_<snr>db.csv
//
// Random streams are derived from cfg.seed per stage, so stages can be rerun
// independently and reproduce identical artifacts.

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "hmlr/bank.hpp"
#include "hmlr/config.hpp"
#include "hmlr/evaluation.hpp"

namespace hmlr {

enum class Stage : std::uint64_t { Channels = 1, Bank = 2, HypernetInit = 3, Training = 4, Evaluation = 5, PretrainOne = 6 };

Rng stage_rng(const ExperimentConfig& cfg, Stage stage);

ChannelSet generate_channels(const ExperimentConfig& cfg);

void cmd_gen_channels(const ExperimentConfig& cfg, const std::filesystem::path& out, std::ostream& log);
void cmd_build_bank(const ExperimentConfig& cfg, const std::filesystem::path& out, std::ostream& log);
void cmd_pretrain_one(const ExperimentConfig& cfg, const std::filesystem::path& out, std::ostream& log);
void cmd_train(const ExperimentConfig& cfg, double beta, const std::filesystem::path& out, std::ostream& log);
SerReport cmd_ser_vs_snr(const ExperimentConfig& cfg, const std::filesystem::path& out, std::ostream& log);
// Runs every SNR in cfg.evaluation.hop_snr_db unless `snr_db` is given.
std::vector<SerReport> cmd_ser_vs_hop(const ExperimentConfig& cfg, std::optional<double> snr_db,
                                      const std::filesystem::path& out, std::ostream& log);

}  // namespace hmlr
