#pragma once

// Paired Monte Carlo SER evaluation. Every detector sees the same
// (channel, x, noise) trial; the trial stream for (snr, sequence, hop,
// trial) is derived from the evaluation seed alone, so counts do not depend
// on which other SNRs are evaluated or on the worker count.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hmlr/bank.hpp"
#include "hmlr/detectors.hpp"
#include "hmlr/hypernet.hpp"
#include "hmlr/modem.hpp"

namespace hmlr {

using TrialDetector = std::function<SymbolVector(const DetectionProblem&)>;

// prepare(H, sigma2) runs once per channel and noise level (e.g. a hypernetwork
// forward) and returns the per-trial detector.
struct NamedDetector {
  std::string name;
  std::function<TrialDetector(const ComplexMatrix&, double)> prepare;
};

NamedDetector zf_detector();
NamedDetector mmse_detector();
NamedDetector ml_detector(std::size_t cap = kDefaultMlCap);
NamedDetector mmnet_detector(std::string name, MmnetParams params);
NamedDetector hypernet_detector(std::string name, HypernetParams theta);

struct SerRow {
  std::string detector;
  std::optional<std::size_t> hop;  // set for per-hop reports
  double snr_db = 0.0;
  std::size_t trials = 0;          // transmitted vectors
  std::size_t errors = 0;          // user-symbol errors
  double ser = 0.0;                // errors / (trials * n_tx)
  double ci95 = 0.0;               // normal-approximation half-width
  bool low_count = false;          // errors < 10: the interval is unreliable
};

SerRow make_ser_row(std::string detector, std::optional<std::size_t> hop, double snr_db, std::size_t trials,
                    std::size_t errors, std::size_t n_tx);

struct SerReport {
  std::vector<SerRow> rows;

  const SerRow& find(const std::string& detector, double snr_db, std::optional<std::size_t> hop = {}) const;
};

// Error counts indexed [detector][snr][hop], summed over sequences.
struct ErrorCounts {
  std::vector<std::string> detectors;
  std::vector<double> snr_db;
  std::size_t hops = 0;                   // horizon + 1
  std::size_t trials_per_cell = 0;       // sequences * trials_per_channel
  std::vector<std::size_t> counts;

  std::size_t at(std::size_t det, std::size_t snr, std::size_t hop) const {
    return counts[(det * snr_db.size() + snr) * hops + hop];
  }
};

struct PairedEvalConfig {
  std::vector<double> snr_db;
  std::size_t trials_per_channel = 20;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

// All sequences must share the system dimensions of the first one.
ErrorCounts evaluate_paired(std::span<const ChannelSequence> sequences, std::span<const NamedDetector> detectors,
                            const Constellation& c, const PairedEvalConfig& cfg);

// Pooled over all hops and sequences.
SerReport ser_vs_snr_report(const ErrorCounts& counts, std::size_t n_tx);
// One row per (detector, hop) at the given grid SNR.
SerReport ser_vs_hop_report(const ErrorCounts& counts, double snr_db, std::size_t n_tx);

void write_ser_vs_snr_csv(std::ostream& out, const SerReport& report);
void write_ser_vs_hop_csv(std::ostream& out, const SerReport& report);

}  // namespace hmlr
