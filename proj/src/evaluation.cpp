#include "hmlr/evaluation.hpp"

#include <bit>
#include <cmath>
#include <memory>
#include <ostream>

#include <fmt/format.h>

#include "hmlr/channel.hpp"
#include "hmlr/errors.hpp"
#include "hmlr/mmnet.hpp"
#include "hmlr/parallel.hpp"

namespace hmlr {

NamedDetector zf_detector() {
  return {"ZF", [](const ComplexMatrix&, double) -> TrialDetector { return detect_zf; }};
}

NamedDetector mmse_detector() {
  return {"MMSE", [](const ComplexMatrix&, double) -> TrialDetector { return detect_mmse; }};
}

NamedDetector ml_detector(std::size_t cap) {
  return {"ML", [cap](const ComplexMatrix&, double) -> TrialDetector {
            return [cap](const DetectionProblem& p) { return detect_ml(p, cap); };
          }};
}

NamedDetector mmnet_detector(std::string name, MmnetParams params) {
  auto shared = std::make_shared<const MmnetParams>(std::move(params));
  return {std::move(name), [shared](const ComplexMatrix&, double) -> TrialDetector {
            return [shared](const DetectionProblem& p) {
              return mmnet_detect(*shared, DetectorInput::make(p.h, p.y, p.sigma2), p.constellation);
            };
          }};
}

NamedDetector hypernet_detector(std::string name, HypernetParams theta) {
  return {std::move(name), [theta = std::move(theta)](const ComplexMatrix& h, double sigma2) -> TrialDetector {
            return [w = hypernet_forward(theta, h, sigma2)](const DetectionProblem& p) {
              return mmnet_detect(w, DetectorInput::make(p.h, p.y, p.sigma2), p.constellation);
            };
          }};
}

SerRow make_ser_row(std::string detector, std::optional<std::size_t> hop, double snr_db, std::size_t trials,
                    std::size_t errors, std::size_t n_tx) {
  SerRow r{std::move(detector), hop, snr_db, trials, errors};
  const double n = static_cast<double>(trials * n_tx);
  if (n > 0) {
    r.ser = static_cast<double>(errors) / n;
    r.ci95 = 1.96 * std::sqrt(r.ser * (1.0 - r.ser) / n);
  }
  r.low_count = errors < 10;
  return r;
}

const SerRow& SerReport::find(const std::string& detector, double snr_db, std::optional<std::size_t> hop) const {
  for (const SerRow& r : rows) {
    if (r.detector == detector && r.snr_db == snr_db && r.hop == hop) return r;
  }
  fail(ErrorKind::Domain, fmt::format("report has no row for {} at {} dB", detector, snr_db));
}

ErrorCounts evaluate_paired(std::span<const ChannelSequence> sequences, std::span<const NamedDetector> detectors,
                            const Constellation& c, const PairedEvalConfig& cfg) {
  require(!sequences.empty(), ErrorKind::Domain, "evaluate_paired: no channels");
  require(!detectors.empty() && !cfg.snr_db.empty(), ErrorKind::Domain, "evaluate_paired: nothing to evaluate");
  const std::size_t hops = sequences[0].horizon() + 1;
  const std::size_t n_rx = sequences[0].initial.rows();
  const std::size_t n_tx = sequences[0].initial.cols();
  for (const ChannelSequence& s : sequences) {
    require(s.horizon() + 1 == hops && s.initial.rows() == n_rx && s.initial.cols() == n_tx, ErrorKind::Dimension,
            "evaluate_paired: sequences differ in shape");
  }

  ErrorCounts out;
  for (const NamedDetector& d : detectors) out.detectors.push_back(d.name);
  out.snr_db = cfg.snr_db;
  out.hops = hops;
  out.trials_per_cell = sequences.size() * cfg.trials_per_channel;
  out.counts.assign(detectors.size() * cfg.snr_db.size() * hops, 0);

  // One work item per (snr, sequence, hop) channel.
  const std::size_t n_seq = sequences.size();
  const std::size_t cells = cfg.snr_db.size() * n_seq * hops;
  std::vector<std::size_t> local(cells * detectors.size(), 0);
  const Rng root(cfg.seed);
  parallel_for(cells, cfg.workers, [&](std::size_t cell) {
    const std::size_t snr_i = cell / (n_seq * hops);
    const std::size_t seq = (cell / hops) % n_seq;
    const std::size_t hop = cell % hops;
    const double snr = cfg.snr_db[snr_i];
    const ComplexMatrix& h = sequences[seq].at(hop);
    const NoiseModel noise = NoiseModel::from_snr(snr, n_tx, n_rx);
    std::vector<TrialDetector> run;
    for (const NamedDetector& d : detectors) run.push_back(d.prepare(h, noise.sigma2));
    const Rng cell_rng = root.split(std::bit_cast<std::uint64_t>(snr)).split(seq).split(hop);
    std::size_t* slot = &local[cell * detectors.size()];
    for (std::size_t t = 0; t < cfg.trials_per_channel; ++t) {
      Rng r = cell_rng.split(t);
      const SymbolVector x = sample_symbols(c, n_tx, r);
      const DetectionProblem p{transmit(h, x.values, noise, r), h, noise.sigma2, c};
      for (std::size_t d = 0; d < run.size(); ++d) slot[d] += symbol_errors(x, run[d](p));
    }
  });

  for (std::size_t cell = 0; cell < cells; ++cell) {
    const std::size_t snr_i = cell / (n_seq * hops);
    const std::size_t hop = cell % hops;
    for (std::size_t d = 0; d < detectors.size(); ++d) {
      out.counts[(d * cfg.snr_db.size() + snr_i) * hops + hop] += local[cell * detectors.size() + d];
    }
  }
  return out;
}

SerReport ser_vs_snr_report(const ErrorCounts& counts, std::size_t n_tx) {
  SerReport report;
  for (std::size_t s = 0; s < counts.snr_db.size(); ++s) {
    for (std::size_t d = 0; d < counts.detectors.size(); ++d) {
      std::size_t errors = 0;
      for (std::size_t t = 0; t < counts.hops; ++t) errors += counts.at(d, s, t);
      report.rows.push_back(make_ser_row(counts.detectors[d], std::nullopt, counts.snr_db[s],
                                         counts.trials_per_cell * counts.hops, errors, n_tx));
    }
  }
  return report;
}

SerReport ser_vs_hop_report(const ErrorCounts& counts, double snr_db, std::size_t n_tx) {
  std::size_t s = 0;
  while (s < counts.snr_db.size() && counts.snr_db[s] != snr_db) ++s;
  require(s < counts.snr_db.size(), ErrorKind::Domain, fmt::format("ser_vs_hop: {} dB was not evaluated", snr_db));
  SerReport report;
  for (std::size_t t = 0; t < counts.hops; ++t) {
    for (std::size_t d = 0; d < counts.detectors.size(); ++d) {
      report.rows.push_back(
          make_ser_row(counts.detectors[d], t, snr_db, counts.trials_per_cell, counts.at(d, s, t), n_tx));
    }
  }
  return report;
}

void write_ser_vs_snr_csv(std::ostream& out, const SerReport& report) {
  out << "detector,snr_db,trials,errors,ser,ci95\n";
  for (const SerRow& r : report.rows) {
    out << fmt::format("{},{},{},{},{:.10g},{:.10g}\n", r.detector, r.snr_db, r.trials, r.errors, r.ser, r.ci95);
  }
}

void write_ser_vs_hop_csv(std::ostream& out, const SerReport& report) {
  out << "detector,hop,snr_db,trials,errors,ser,ci95\n";
  for (const SerRow& r : report.rows) {
    out << fmt::format("{},{},{},{},{},{:.10g},{:.10g}\n", r.detector, r.hop.value_or(0), r.snr_db, r.trials,
                       r.errors, r.ser, r.ci95);
  }
}

}  // namespace hmlr
