#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

#include "doctest.h"
#include "hmlr/errors.hpp"
#include "hmlr/evaluation.hpp"
#include "hmlr/experiment.hpp"

using namespace hmlr;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("hmlr_" + tag + "_" + std::to_string(std::random_device{}()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<ChannelSequence> test_sequences(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  const ComplexMatrix h0 = sample_kronecker(KroneckerConfig{}, rng);
  std::vector<ChannelSequence> out;
  for (std::size_t s = 0; s < n; ++s) out.push_back(jakes_sequence(h0, JakesConfig{0.98, 2}, rng));
  return out;
}

ExperimentConfig tiny_config() {
  ExperimentConfig c = parse_config(
      "[channel]\nhorizon = 2\n"
      "[hypernet]\nhidden = 8\n"
      "[training]\niterations = 20\nbatch_channels = 8\ncheck_interval = 5\n"
      "[bank]\nn_sequences = 2\npretrain_iterations = 5\npretrain_batch = 16\npretrain_eval_batch = 16\n"
      "[evaluation]\nn_test_sequences = 3\ntrials_per_channel = 4\nsnr_grid_db = 5, 10\nhop_snr_db = 10\n"
      "[run]\nseed = 4\nworkers = 2\n");
  return c;
}

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("SER rows") {
  const SerRow r = make_ser_row("ZF", std::nullopt, 7.0, 1000, 50, 2);
  CHECK(r.ser == 0.025);
  CHECK(r.ci95 == doctest::Approx(1.96 * std::sqrt(0.025 * 0.975 / 2000.0)).epsilon(1e-12));
  CHECK_FALSE(r.low_count);
  const SerRow z = make_ser_row("ML", 3, 10.0, 100, 0, 2);
  CHECK(z.ser == 0.0);
  CHECK(z.ci95 == 0.0);
  CHECK(z.low_count);
  CHECK(z.hop == 3);
  CHECK(make_ser_row("x", {}, 0, 10, 9, 1).low_count);
  CHECK_FALSE(make_ser_row("x", {}, 0, 10, 10, 1).low_count);
}

TEST_CASE("paired counts are deterministic and independent of workers and grid") {
  const auto seqs = test_sequences(4, 2);
  const Constellation c = make_qam(4);
  const std::vector<NamedDetector> dets{zf_detector(), mmse_detector(), ml_detector()};
  PairedEvalConfig cfg{{5.0, 10.0}, 30, 11, 1};
  const ErrorCounts a = evaluate_paired(seqs, dets, c, cfg);
  cfg.workers = 4;
  const ErrorCounts b = evaluate_paired(seqs, dets, c, cfg);
  CHECK(a.counts == b.counts);
  CHECK(a.hops == 3);
  CHECK(a.trials_per_cell == 120);
  cfg.snr_db = {10.0};
  const ErrorCounts only10 = evaluate_paired(seqs, dets, c, cfg);
  for (std::size_t d = 0; d < dets.size(); ++d) {
    for (std::size_t t = 0; t < 3; ++t) CHECK(only10.at(d, 0, t) == a.at(d, 1, t));
  }
  // Paired trials: ML never loses to ZF by much, and lower SNR costs errors.
  std::size_t ml = 0, zf = 0, zf5 = 0;
  for (std::size_t t = 0; t < 3; ++t) {
    ml += a.at(2, 1, t);
    zf += a.at(0, 1, t);
    zf5 += a.at(0, 0, t);
  }
  CHECK(ml <= zf);
  CHECK(zf5 >= zf);
}

TEST_CASE("reports and CSV schemas") {
  const auto seqs = test_sequences(2, 3);
  const Constellation c = make_qam(4);
  const std::vector<NamedDetector> dets{zf_detector(), mmse_detector()};
  const ErrorCounts counts = evaluate_paired(seqs, dets, c, PairedEvalConfig{{5.0, 8.0}, 10, 1, 2});
  const SerReport snr = ser_vs_snr_report(counts, 2);
  REQUIRE(snr.rows.size() == 4);
  const SerRow& row = snr.find("MMSE", 8.0);
  CHECK(row.trials == 2 * 10 * 3);
  std::size_t pooled = 0;
  for (std::size_t t = 0; t < 3; ++t) pooled += counts.at(1, 1, t);
  CHECK(row.errors == pooled);
  CHECK_THROWS_AS(snr.find("ML", 8.0), Error);

  const SerReport hop = ser_vs_hop_report(counts, 5.0, 2);
  REQUIRE(hop.rows.size() == 6);
  CHECK(hop.find("ZF", 5.0, 2).errors == counts.at(0, 0, 2));
  CHECK(hop.find("ZF", 5.0, 2).trials == 20);
  CHECK_THROWS_AS(ser_vs_hop_report(counts, 6.0, 2), Error);

  std::ostringstream a, b;
  write_ser_vs_snr_csv(a, snr);
  write_ser_vs_hop_csv(b, hop);
  std::istringstream ia(a.str()), ib(b.str());
  std::string line;
  std::getline(ia, line);
  CHECK(line == "detector,snr_db,trials,errors,ser,ci95");
  std::size_t n = 0;
  while (std::getline(ia, line)) ++n;
  CHECK(n == 4);
  std::getline(ib, line);
  CHECK(line == "detector,hop,snr_db,trials,errors,ser,ci95");
}

TEST_CASE("hypernetwork and MMNet detectors wrap their forward passes") {
  const auto seqs = test_sequences(1, 5);
  const Constellation c = make_qam(4);
  Rng rng(1);
  const MmnetParams w = mmnet_init(seqs[0].initial, SystemDims{}, 0.0, rng);
  const HypernetParams theta = hypernet_init(HypernetConfig{}, rng);
  const NamedDetector m = mmnet_detector("MMNet", w);
  const NamedDetector h = hypernet_detector("HyperMIMO", theta);
  CHECK(m.name == "MMNet");
  const SymbolVector x = sample_symbols(c, 2, rng);
  const ComplexVector y = transmit(seqs[0].initial, x.values, NoiseModel{0.05, 0}, rng);
  const DetectionProblem p{y, seqs[0].initial, 0.05, c};
  CHECK(m.prepare(seqs[0].initial, 0.05)(p).indices ==
        mmnet_detect(w, DetectorInput::make(seqs[0].initial, y, 0.05), c).indices);
  const MmnetParams generated = hypernet_forward(theta, seqs[0].initial, 0.05);
  CHECK(h.prepare(seqs[0].initial, 0.05)(p).indices ==
        mmnet_detect(generated, DetectorInput::make(seqs[0].initial, y, 0.05), c).indices);
}

}  // TEST_SUITE

TEST_SUITE("experiment") {

TEST_CASE("stage streams are distinct and reproducible") {
  const ExperimentConfig c = tiny_config();
  Rng a = stage_rng(c, Stage::Bank), b = stage_rng(c, Stage::Bank), t = stage_rng(c, Stage::Training);
  const std::uint64_t x = a.next_u64();
  CHECK(x == b.next_u64());
  CHECK(x != t.next_u64());
  const ChannelSet s1 = generate_channels(c), s2 = generate_channels(c);
  CHECK(s1 == s2);
  CHECK(s1.sequences.size() == 3);
  CHECK(s1.sequences[0].initial == s1.h0);
  CHECK(s1.sequences[1].horizon() == 2);
}

TEST_CASE("full pipeline runs and reruns byte-identically") {
  const ExperimentConfig cfg = tiny_config();
  TempDir d1("pipe1"), d2("pipe2");
  std::ostringstream log;
  for (const fs::path& out : {d1.path, d2.path}) {
    cmd_gen_channels(cfg, out, log);
    cmd_build_bank(cfg, out, log);
    cmd_pretrain_one(cfg, out, log);
    cmd_train(cfg, 0.0, out, log);
    cmd_train(cfg, 1.0, out, log);
    cmd_ser_vs_snr(cfg, out, log);
    cmd_ser_vs_hop(cfg, std::nullopt, out, log);
  }
  CHECK(load_bank(d1.path / "bank").size() == 2 * 2 + 1);
  CHECK(load_bank(d1.path / "pretrain_one").size() == 1);
  CHECK(load_hypernet(d1.path / "hypermimo").beta == 0.0);
  CHECK(load_hypernet(d1.path / "hypermimo_lr").beta == 1.0);
  for (const char* rel : {"results/ser_vs_snr.csv", "results/ser_vs_hop_10db.csv", "bank/manifest.json",
                          "hypermimo_lr/theta.bin", "hypermimo/train_log.csv", "channels/manifest.json"}) {
    INFO(rel);
    REQUIRE(fs::exists(d1.path / rel));
    CHECK(slurp(d1.path / rel) == slurp(d2.path / rel));
  }
  const std::string snr = slurp(d1.path / "results/ser_vs_snr.csv");
  for (const char* det : {"ZF,", "MMSE,", "ML,", "MMNet,", "HyperMIMO,", "HyperMIMO-LR,"}) {
    CHECK(snr.find(std::string("\n") + det) != std::string::npos);
  }
}

TEST_CASE("stages report missing inputs") {
  const ExperimentConfig cfg = tiny_config();
  TempDir d("missing");
  std::ostringstream log;
  try {
    cmd_build_bank(cfg, d.path, log);
    FAIL("expected a missing artifact");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MissingArtifact);
    CHECK(std::string(e.what()).find("gen-channels") != std::string::npos);
  }
  cmd_gen_channels(cfg, d.path, log);
  CHECK_THROWS_AS(cmd_ser_vs_snr(cfg, d.path, log), Error);
}

TEST_CASE("command line exit codes") {
  TempDir d("cli");
  const std::string cli = HMLR_CLI_PATH;
  auto run = [&](const std::string& args) {
    const int status = std::system((cli + " " + args + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(status);
  };
  const fs::path ini = d.path / "bad.ini";
  std::ofstream(ini) << "[system]\nn_rx = x\n";
  CHECK(run("--out " + d.path.string() + " build-bank") == 3);
  CHECK(run("--config " + ini.string() + " show-config") == 2);
  CHECK(run("no-such-command") == 2);
  CHECK(run("show-config") == 0);
}

}  // TEST_SUITE
