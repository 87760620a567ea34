#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "hmlr/bank.hpp"
#include "hmlr/config.hpp"
#include "hmlr/errors.hpp"
#include "hmlr/experiment.hpp"
#include "hmlr/kernels.hpp"

namespace {

int exit_code(hmlr::ErrorKind kind) {
  switch (kind) {
    case hmlr::ErrorKind::Config:
      return 2;
    case hmlr::ErrorKind::MissingArtifact:
      return 3;
    case hmlr::ErrorKind::Divergence:
      return 4;
    default:
      return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hypernetwork MIMO detection with a learned-bank regulariser"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::string out = "run";
  app.add_option("--config", config_path, "Experiment config file (INI)");
  app.add_option("--seed", seed, "Override run.seed");
  app.add_option("--out", out, "Artifact directory")->capture_default_str();
  app.add_option("--workers", workers, "Override run.workers");

  auto* gen = app.add_subcommand("gen-channels", "Generate H0 and the test sequences");

  std::optional<std::size_t> bank_sequences, horizon;
  auto* bank_cmd = app.add_subcommand("build-bank", "Pretrain one MMNet per bank channel");
  bank_cmd->add_option("--sequences", bank_sequences, "Override bank.n_sequences");
  bank_cmd->add_option("--horizon", horizon, "Override channel.horizon");

  auto* pre = app.add_subcommand("pretrain-one", "Pretrain a single MMNet on H0");

  double beta = 1.0;
  std::optional<std::size_t> iterations;
  auto* train = app.add_subcommand("train", "Train the hypernetwork (beta 0: HyperMIMO, beta > 0: HyperMIMO-LR)");
  train->add_option("--beta", beta, "Weight of the bank regulariser")->required();
  train->add_option("--iterations", iterations, "Override training.iterations");

  auto* snr = app.add_subcommand("ser-vs-snr", "SER over the SNR grid, pooled over sequences and hops");

  std::optional<double> hop_snr;
  auto* hop = app.add_subcommand("ser-vs-hop", "SER per hop at fixed SNR");
  hop->add_option("--snr", hop_snr, "SNR in dB (default: evaluation.hop_snr_db)");

  auto* bank_group = app.add_subcommand("bank", "Archive utilities");
  bank_group->require_subcommand(1);
  std::string inspect_dir;
  auto* inspect = bank_group->add_subcommand("inspect", "Print an archive manifest summary");
  inspect->add_option("dir", inspect_dir, "Archive directory (default: <out>/<paths.bank>)");

  auto* show = app.add_subcommand("show-config", "Print the effective configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    hmlr::ExperimentConfig cfg = config_path.empty() ? hmlr::ExperimentConfig{} : hmlr::load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (workers) cfg.workers = *workers;
    if (bank_sequences) cfg.bank_sequences = *bank_sequences;
    if (horizon) cfg.jakes.horizon = *horizon;
    if (iterations) cfg.training.iterations = *iterations;
    cfg.finalize();

    std::clog << "kernels: " << hmlr::kernels::active().name << "\n";
    if (*gen) {
      hmlr::cmd_gen_channels(cfg, out, std::cout);
    } else if (*bank_cmd) {
      hmlr::cmd_build_bank(cfg, out, std::cout);
    } else if (*pre) {
      hmlr::cmd_pretrain_one(cfg, out, std::cout);
    } else if (*train) {
      hmlr::cmd_train(cfg, beta, out, std::cout);
    } else if (*snr) {
      hmlr::cmd_ser_vs_snr(cfg, out, std::cout);
    } else if (*hop) {
      hmlr::cmd_ser_vs_hop(cfg, hop_snr, out, std::cout);
    } else if (*inspect) {
      const std::filesystem::path dir =
          inspect_dir.empty() ? std::filesystem::path(out) / cfg.paths.bank : std::filesystem::path(inspect_dir);
      if (!std::filesystem::exists(dir / "manifest.json")) {
        throw hmlr::Error(hmlr::ErrorKind::MissingArtifact, "no archive at '" + dir.string() + "'");
      }
      std::cout << hmlr::inspect_archive(dir);
    } else if (*show) {
      std::cout << hmlr::emit_config(cfg);
    }
  } catch (const hmlr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
