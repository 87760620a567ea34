#include "hmlr/experiment.hpp"

#include <fstream>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "hmlr/errors.hpp"
#include "hmlr/training.hpp"

namespace hmlr {

namespace fs = std::filesystem;

namespace {

// Loads an upstream artifact, turning a missing one into an error naming the stage to run.
template <class Fn>
auto load_stage(const fs::path& dir, const char* what, const char* command, Fn&& load) {
  if (!fs::exists(dir / "manifest.json")) {
    fail(ErrorKind::MissingArtifact,
         fmt::format("{} not found at '{}' (run `hmlr {}` first)", what, dir.string(), command));
  }
  return load(dir);
}

ChannelSet load_test_channels(const ExperimentConfig& cfg, const fs::path& out) {
  ChannelSet set = load_stage(out / cfg.paths.channels, "test channels", "gen-channels", load_channels);
  require(set.n_rx == cfg.system.n_rx && set.n_tx == cfg.system.n_tx, ErrorKind::Config,
          "test channels were generated for a different system size");
  return set;
}

ModelBank load_stage_bank(const ExperimentConfig& cfg, const fs::path& out) {
  ModelBank bank = load_stage(out / cfg.paths.bank, "model bank", "build-bank", load_bank);
  require(bank.meta.dims == cfg.system, ErrorKind::Config, "model bank was built for a different system");
  return bank;
}

HypernetArchive load_stage_hypernet(const ExperimentConfig& cfg, const fs::path& out, bool regularized) {
  const fs::path dir = out / (regularized ? cfg.paths.hypermimo_lr : cfg.paths.hypermimo);
  HypernetArchive a = load_stage(dir, regularized ? "HyperMIMO-LR model" : "HyperMIMO model",
                                 regularized ? "train --beta 1" : "train --beta 0", load_hypernet);
  require(a.theta.config().dims == cfg.system, ErrorKind::Config, "hypernetwork was trained for a different system");
  return a;
}

void write_text(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::trunc);
  if (!f) fail(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
  body(f);
  if (!f) fail(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

std::vector<NamedDetector> standard_detectors(const ExperimentConfig& cfg, const fs::path& out,
                                              const ChannelSet& channels) {
  const ModelBank bank = load_stage_bank(cfg, out);
  require(!bank.entries.empty() && bank.entries[0].channel == channels.h0, ErrorKind::Config,
          "model bank was not built from the H0 of the test channels");
  HypernetArchive hm = load_stage_hypernet(cfg, out, false);
  HypernetArchive lr = load_stage_hypernet(cfg, out, true);
  return {zf_detector(),
          mmse_detector(),
          ml_detector(cfg.evaluation.ml_cap),
          mmnet_detector("MMNet", bank.entries[0].params),
          hypernet_detector("HyperMIMO", std::move(hm.theta)),
          hypernet_detector("HyperMIMO-LR", std::move(lr.theta))};
}

ErrorCounts run_evaluation(const ExperimentConfig& cfg, const fs::path& out, std::vector<double> snrs,
                           std::ostream& log) {
  const ChannelSet channels = load_test_channels(cfg, out);
  const std::vector<NamedDetector> detectors = standard_detectors(cfg, out, channels);
  const Constellation c = make_qam(cfg.constellation_order);
  fmt::print(log, "evaluating {} detectors on {} sequences x {} hops x {} trials at {} SNR point(s)\n",
             detectors.size(), channels.sequences.size(), channels.horizon + 1, cfg.evaluation.trials_per_channel,
             snrs.size());
  const PairedEvalConfig pc{std::move(snrs), cfg.evaluation.trials_per_channel,
                            stage_rng(cfg, Stage::Evaluation).seed(), cfg.workers};
  return evaluate_paired(channels.sequences, detectors, c, pc);
}

void print_report(std::ostream& log, const SerReport& report) {
  for (const SerRow& r : report.rows) {
    fmt::print(log, "  {:<13} {}snr={:>5} dB  ser={:.3e} +/- {:.1e}  ({} errors / {} trials){}\n", r.detector,
               r.hop ? fmt::format("t={} ", *r.hop) : std::string(), r.snr_db, r.ser, r.ci95, r.errors, r.trials,
               r.low_count ? "  [low count]" : "");
  }
}

}  // namespace

Rng stage_rng(const ExperimentConfig& cfg, Stage stage) {
  return Rng(cfg.seed).split(static_cast<std::uint64_t>(stage));
}

ChannelSet generate_channels(const ExperimentConfig& cfg) {
  const Rng rng = stage_rng(cfg, Stage::Channels);
  ChannelSet set;
  set.n_rx = cfg.system.n_rx;
  set.n_tx = cfg.system.n_tx;
  set.rho = cfg.jakes.rho;
  set.rho_k = cfg.rho_k;
  set.horizon = cfg.jakes.horizon;
  set.seed = cfg.seed;
  Rng h0_rng = rng.split(0);
  set.h0 = sample_kronecker(cfg.kronecker(), h0_rng);
  const Rng seq_root = rng.split(1);
  for (std::size_t s = 0; s < cfg.evaluation.n_test_sequences; ++s) {
    Rng r = seq_root.split(s);
    set.sequences.push_back(jakes_sequence(set.h0, cfg.jakes, r));
  }
  return set;
}

void cmd_gen_channels(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log) {
  const ChannelSet set = generate_channels(cfg);
  const fs::path dir = out / cfg.paths.channels;
  save_channels(set, dir);
  fmt::print(log, "wrote H0 and {} test sequences (t = 0..{}) to {}\n", set.sequences.size(), set.horizon,
             dir.string());
}

void cmd_build_bank(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log) {
  const ChannelSet channels = load_test_channels(cfg, out);
  const Constellation c = make_qam(cfg.constellation_order);
  Rng rng = stage_rng(cfg, Stage::Bank);
  const std::size_t total = cfg.bank_sequences * cfg.jakes.horizon + 1;
  fmt::print(log, "building bank: {} sequences x {} hops + H0 = {} detectors, {} pretraining iterations each\n",
             cfg.bank_sequences, cfg.jakes.horizon, total, cfg.pretrain.iterations);
  const std::size_t every = std::max<std::size_t>(1, total / 20);
  ModelBank bank = build_bank(channels.h0, cfg.jakes, cfg.bank_sequences, cfg.pretrain, cfg.system, c, rng,
                              cfg.workers, [&](const BankProgress& p) {
                                if (p.done % every == 0 || p.done == p.total) {
                                  fmt::print(log, "  [{}/{}] seq {} hop {}: loss {:.4f} -> {:.4f}\n", p.done, p.total,
                                             p.entry->sequence, p.entry->hop, p.initial_loss, p.final_loss);
                                }
                              });
  bank.meta.rho_k = cfg.rho_k;
  bank.meta.seed = cfg.seed;
  const fs::path dir = out / cfg.paths.bank;
  save_bank(bank, dir);
  fmt::print(log, "wrote {} entries to {}\n", bank.size(), dir.string());
}

void cmd_pretrain_one(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log) {
  const ChannelSet channels = load_test_channels(cfg, out);
  const Constellation c = make_qam(cfg.constellation_order);
  Rng rng = stage_rng(cfg, Stage::PretrainOne);
  const PretrainResult r = pretrain_mmnet(channels.h0, cfg.pretrain, cfg.system, c, rng);
  fmt::print(log, "pretrained MMNet on H0: loss {:.5f} -> {:.5f} over {} iterations\n", r.initial_loss,
             r.final_loss, cfg.pretrain.iterations);
  ModelBank bank;
  bank.meta = BankMeta{cfg.system, cfg.constellation_order, cfg.jakes.rho, cfg.rho_k, 0, 0, cfg.seed, cfg.pretrain};
  bank.entries.push_back(BankEntry{channels.h0, bank_sigma2_ref(cfg.pretrain, cfg.system), r.params, 0, 0});
  const fs::path dir = out / "pretrain_one";
  save_bank(bank, dir);
  fmt::print(log, "wrote {}\n", dir.string());
}

void cmd_train(const ExperimentConfig& cfg, double beta, const fs::path& out, std::ostream& log) {
  TrainConfig tc = cfg.training;
  tc.beta = beta;
  tc.validate();
  const bool regularized = beta > 0.0;
  const ModelBank bank = regularized ? load_stage_bank(cfg, out) : ModelBank{};
  const Constellation c = make_qam(cfg.constellation_order);
  HypernetConfig hc = cfg.hypernet;
  hc.dims = cfg.system;
  Rng init_rng = stage_rng(cfg, Stage::HypernetInit);
  const HypernetParams theta0 = hypernet_init(hc, init_rng);
  Rng rng = stage_rng(cfg, Stage::Training);
  fmt::print(log, "training {} (beta = {}) for {} iterations, batch {}, {} bank entries\n",
             regularized ? "HyperMIMO-LR" : "HyperMIMO", beta, tc.iterations, tc.batch_channels, bank.size());
  TrainResult result = train(theta0, tc, bank, cfg.kronecker(), c, rng, [&](const TrainLogRow& row) {
    fmt::print(log, "  it {:>6}  loss {:.5f}  (a {:.5f}, b {:.5f})  lr {:.3g}\n", row.iteration, row.loss_total,
               row.loss_a, row.loss_b, row.lr);
  });
  const fs::path dir = out / (regularized ? cfg.paths.hypermimo_lr : cfg.paths.hypermimo);
  save_hypernet(HypernetArchive{std::move(result.theta), beta, tc.iterations, cfg.seed, bank.size()}, dir);
  write_text(dir / "train_log.csv", [&](std::ostream& f) { write_train_log_csv(f, result.log); });
  fmt::print(log, "wrote {}\n", dir.string());
}

SerReport cmd_ser_vs_snr(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log) {
  const ErrorCounts counts = run_evaluation(cfg, out, cfg.evaluation.snr_grid_db, log);
  SerReport report = ser_vs_snr_report(counts, cfg.system.n_tx);
  const fs::path path = out / cfg.paths.results / "ser_vs_snr.csv";
  write_text(path, [&](std::ostream& f) { write_ser_vs_snr_csv(f, report); });
  print_report(log, report);
  fmt::print(log, "wrote {}\n", path.string());
  return report;
}

std::vector<SerReport> cmd_ser_vs_hop(const ExperimentConfig& cfg, std::optional<double> snr_db,
                                      const fs::path& out, std::ostream& log) {
  const std::vector<double> snrs = snr_db ? std::vector<double>{*snr_db} : cfg.evaluation.hop_snr_db;
  const ErrorCounts counts = run_evaluation(cfg, out, snrs, log);
  std::vector<SerReport> reports;
  for (double snr : snrs) {
    SerReport report = ser_vs_hop_report(counts, snr, cfg.system.n_tx);
    const fs::path path = out / cfg.paths.results / fmt::format("ser_vs_hop_{}db.csv", snr);
    write_text(path, [&](std::ostream& f) { write_ser_vs_hop_csv(f, report); });
    print_report(log, report);
    fmt::print(log, "wrote {}\n", path.string());
    reports.push_back(std::move(report));
  }
  return reports;
}

}  // namespace hmlr
