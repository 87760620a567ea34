#include "hmlr/bank.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <fmt/format.h>

#include "hmlr/parallel.hpp"
#include "json.hpp"

namespace hmlr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kBankTag = "hmlr.model-bank";
constexpr const char* kChannelTag = "hmlr.channel-set";
constexpr const char* kHypernetTag = "hmlr.hypernet";
constexpr const char* kManifest = "manifest.json";

void append_channel(std::vector<double>& out, const ComplexMatrix& h) {
  for (const cdouble& v : h.values()) out.push_back(v.real());
  for (const cdouble& v : h.values()) out.push_back(v.imag());
}

ComplexMatrix read_channel(std::span<const double> in, std::size_t rows, std::size_t cols) {
  const std::size_t n = rows * cols;
  ComplexMatrix h(rows, cols);
  for (std::size_t i = 0; i < n; ++i) h.data()[i] = {in[i], in[i + n]};
  return h;
}

std::string hex32(std::uint32_t v) { return fmt::format("{:08x}", v); }

void write_file(const fs::path& path, std::span<const unsigned char> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

std::vector<unsigned char> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path.string() + "'");
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_manifest(const fs::path& dir, const json& manifest) {
  const std::string text = manifest.dump(2) + "\n";
  write_file(dir / kManifest, std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

json read_manifest(const fs::path& dir, const char* tag) {
  const fs::path path = dir / kManifest;
  if (!fs::exists(path)) fail(ErrorKind::MissingArtifact, "no manifest at '" + path.string() + "'");
  const std::vector<unsigned char> bytes = read_file(path);
  json m;
  try {
    m = json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, "manifest '" + path.string() + "' is not valid JSON: " + e.what());
  }
  if (!m.is_object() || !m.contains("format") || !m.contains("version")) {
    fail(ErrorKind::Format, "manifest '" + path.string() + "' lacks format/version");
  }
  if (tag != nullptr && m.at("format") != tag) {
    fail(ErrorKind::Format, "manifest '" + path.string() + "' has format '" + m.at("format").dump() + "', expected '" +
                                tag + "'");
  }
  if (!m.at("version").is_number_integer() || m.at("version").get<int>() != kArchiveVersion) {
    fail(ErrorKind::Version, "manifest '" + path.string() + "' has unsupported version " + m.at("version").dump() +
                                 " (supported: " + std::to_string(kArchiveVersion) + ")");
  }
  return m;
}

std::vector<double> read_blob(const fs::path& dir, const json& entry, std::size_t expected_doubles) {
  const fs::path path = dir / entry.at("file").get<std::string>();
  if (!fs::exists(path)) fail(ErrorKind::Truncated, "missing blob '" + path.string() + "'");
  const std::vector<unsigned char> bytes = read_file(path);
  if (bytes.size() != expected_doubles * sizeof(double)) {
    fail(ErrorKind::Truncated, fmt::format("blob '{}' has {} bytes, expected {}", path.string(), bytes.size(),
                                           expected_doubles * sizeof(double)));
  }
  if (hex32(crc32_of(bytes)) != entry.at("crc32").get<std::string>()) {
    fail(ErrorKind::Checksum, "checksum mismatch for '" + path.string() + "'");
  }
  return decode_doubles(bytes);
}

json pretrain_json(const PretrainConfig& p) {
  return json{{"iterations", p.iterations}, {"batch", p.batch},           {"lr", p.lr},
              {"snr_min_db", p.snr_min_db}, {"snr_max_db", p.snr_max_db}, {"init_std", p.init_std},
              {"eval_batch", p.eval_batch}};
}

PretrainConfig pretrain_from_json(const json& j) {
  PretrainConfig p;
  p.iterations = j.at("iterations").get<std::size_t>();
  p.batch = j.at("batch").get<std::size_t>();
  p.lr = j.at("lr").get<double>();
  p.snr_min_db = j.at("snr_min_db").get<double>();
  p.snr_max_db = j.at("snr_max_db").get<double>();
  p.init_std = j.at("init_std").get<double>();
  p.eval_batch = j.at("eval_batch").get<std::size_t>();
  return p;
}

template <class Fn>
auto guarded(const fs::path& dir, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, "malformed manifest in '" + dir.string() + "': " + e.what());
  }
}

}  // namespace

std::uint32_t crc32_of(std::span<const unsigned char> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; blobs here are far below 4 GiB.
  crc = ::crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

std::vector<unsigned char> encode_doubles(std::span<const double> values) {
  std::vector<unsigned char> out(values.size() * 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(values[i]);
    for (std::size_t b = 0; b < 8; ++b) out[i * 8 + b] = static_cast<unsigned char>(bits >> (8 * b));
  }
  return out;
}

std::vector<double> decode_doubles(std::span<const unsigned char> bytes) {
  require(bytes.size() % 8 == 0, ErrorKind::Truncated, "blob length is not a multiple of 8");
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (std::size_t b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[i * 8 + b]) << (8 * b);
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

double bank_sigma2_ref(const PretrainConfig& pre, const SystemDims& dims) {
  return sigma2_for_snr(0.5 * (pre.snr_min_db + pre.snr_max_db), dims.n_tx, dims.n_rx);
}

ModelBank build_bank(const ComplexMatrix& h0, const JakesConfig& jakes, std::size_t n_sequences,
                     const PretrainConfig& pre, const SystemDims& dims, const Constellation& c, Rng& rng,
                     std::size_t workers, const std::function<void(const BankProgress&)>& progress) {
  jakes.validate();
  dims.validate();
  require(h0.rows() == dims.n_rx && h0.cols() == dims.n_tx, ErrorKind::Dimension,
          "build_bank: initial channel does not match system dimensions");
  require(n_sequences >= 1, ErrorKind::Config, "build_bank: need at least one sequence");

  ModelBank bank;
  bank.meta = BankMeta{dims, c.order(), jakes.rho, 0.0, jakes.horizon, n_sequences, rng.seed(), pre};
  const double sigma2_ref = bank_sigma2_ref(pre, dims);

  bank.entries.push_back({h0, sigma2_ref, {}, 0, 0});
  const Rng seq_root = rng.split(0);
  for (std::size_t s = 0; s < n_sequences; ++s) {
    Rng seq_rng = seq_root.split(s);
    ChannelSequence seq = jakes_sequence(h0, jakes, seq_rng);
    for (std::size_t t = 1; t <= jakes.horizon; ++t) {
      bank.entries.push_back({std::move(seq.steps[t - 1]), sigma2_ref, {}, s, t});
    }
  }

  const Rng train_root = rng.split(1);
  std::mutex progress_mu;
  std::size_t done = 0;
  parallel_for(bank.entries.size(), workers, [&](std::size_t k) {
    BankEntry& e = bank.entries[k];
    Rng train_rng = train_root.split(k);
    PretrainResult r;
    try {
      r = pretrain_mmnet(e.channel, pre, dims, c, train_rng);
    } catch (const Error& err) {
      fail(err.kind(), fmt::format("bank entry {} (sequence {}, hop {}): {}", k, e.sequence, e.hop, err.what()));
    }
    e.params = std::move(r.params);
    if (progress) {
      std::lock_guard lock(progress_mu);
      progress(BankProgress{++done, bank.entries.size(), &e, r.initial_loss, r.final_loss});
    }
  });
  return bank;
}

void save_bank(const ModelBank& bank, const fs::path& dir) {
  fs::create_directories(dir);
  const BankMeta& m = bank.meta;
  json entries = json::array();
  for (std::size_t k = 0; k < bank.entries.size(); ++k) {
    const BankEntry& e = bank.entries[k];
    require(e.params.dims() == m.dims, ErrorKind::Dimension, "save_bank: entry dimensions differ from bank");
    std::vector<double> payload;
    append_channel(payload, e.channel);
    const auto flat = e.params.flat();
    payload.insert(payload.end(), flat.begin(), flat.end());
    const std::vector<unsigned char> bytes = encode_doubles(payload);
    const std::string name = fmt::format("entry_{:05d}.bin", k);
    write_file(dir / name, bytes);
    entries.push_back(json{{"file", name},
                           {"sequence", e.sequence},
                           {"hop", e.hop},
                           {"sigma2_ref", e.sigma2_ref},
                           {"crc32", hex32(crc32_of(bytes))}});
  }
  json manifest{{"format", kBankTag},
                {"version", kArchiveVersion},
                {"system", {{"n_rx", m.dims.n_rx}, {"n_tx", m.dims.n_tx}, {"layers", m.dims.layers},
                            {"constellation", m.constellation_order}, {"params_per_entry", m.dims.param_count()}}},
                {"channel", {{"rho", m.rho}, {"rho_k", m.rho_k}, {"horizon", m.horizon}, {"n_sequences", m.n_sequences}}},
                {"seed", m.seed},
                {"pretrain", pretrain_json(m.pretrain)},
                {"layout", "little-endian f64: Re(H) row-major, Im(H) row-major, detector params"},
                {"entries", entries}};
  write_manifest(dir, manifest);
}

ModelBank load_bank(const fs::path& dir) {
  const json m = read_manifest(dir, kBankTag);
  return guarded(dir, [&] {
    ModelBank bank;
    BankMeta& meta = bank.meta;
    const json& sys = m.at("system");
    meta.dims = SystemDims{sys.at("n_rx").get<std::size_t>(), sys.at("n_tx").get<std::size_t>(),
                           sys.at("layers").get<std::size_t>()};
    meta.constellation_order = sys.at("constellation").get<std::size_t>();
    const json& ch = m.at("channel");
    meta.rho = ch.at("rho").get<double>();
    meta.rho_k = ch.at("rho_k").get<double>();
    meta.horizon = ch.at("horizon").get<std::size_t>();
    meta.n_sequences = ch.at("n_sequences").get<std::size_t>();
    meta.seed = m.at("seed").get<std::uint64_t>();
    meta.pretrain = pretrain_from_json(m.at("pretrain"));

    const std::size_t nch = meta.dims.n_rx * meta.dims.n_tx;
    const std::size_t np = meta.dims.param_count();
    for (const json& e : m.at("entries")) {
      const std::vector<double> payload = read_blob(dir, e, 2 * nch + np);
      bank.entries.push_back(BankEntry{read_channel(payload, meta.dims.n_rx, meta.dims.n_tx), e.at("sigma2_ref").get<double>(),
                                       MmnetParams::unflatten(meta.dims, std::span(payload).subspan(2 * nch)),
                                       e.at("sequence").get<std::size_t>(), e.at("hop").get<std::size_t>()});
    }
    return bank;
  });
}

void save_channels(const ChannelSet& set, const fs::path& dir) {
  fs::create_directories(dir);
  json entries = json::array();
  std::vector<double> h0_payload;
  append_channel(h0_payload, set.h0);
  const auto h0_bytes = encode_doubles(h0_payload);
  write_file(dir / "h0.bin", h0_bytes);
  for (std::size_t s = 0; s < set.sequences.size(); ++s) {
    const ChannelSequence& seq = set.sequences[s];
    require(seq.horizon() == set.horizon, ErrorKind::Dimension, "save_channels: sequence horizon mismatch");
    std::vector<double> payload;
    for (std::size_t t = 0; t <= seq.horizon(); ++t) append_channel(payload, seq.at(t));
    const auto bytes = encode_doubles(payload);
    const std::string name = fmt::format("seq_{:05d}.bin", s);
    write_file(dir / name, bytes);
    entries.push_back(json{{"file", name}, {"sequence", s}, {"matrices", seq.horizon() + 1}, {"crc32", hex32(crc32_of(bytes))}});
  }
  json manifest{{"format", kChannelTag},
                {"version", kArchiveVersion},
                {"system", {{"n_rx", set.n_rx}, {"n_tx", set.n_tx}}},
                {"channel", {{"rho", set.rho}, {"rho_k", set.rho_k}, {"horizon", set.horizon}}},
                {"seed", set.seed},
                {"h0", {{"file", "h0.bin"}, {"crc32", hex32(crc32_of(h0_bytes))}}},
                {"layout", "little-endian f64 per matrix: Re(H) row-major, Im(H) row-major; H_0..H_T per sequence"},
                {"entries", entries}};
  write_manifest(dir, manifest);
}

ChannelSet load_channels(const fs::path& dir) {
  const json m = read_manifest(dir, kChannelTag);
  return guarded(dir, [&] {
    ChannelSet set;
    set.n_rx = m.at("system").at("n_rx").get<std::size_t>();
    set.n_tx = m.at("system").at("n_tx").get<std::size_t>();
    set.rho = m.at("channel").at("rho").get<double>();
    set.rho_k = m.at("channel").at("rho_k").get<double>();
    set.horizon = m.at("channel").at("horizon").get<std::size_t>();
    set.seed = m.at("seed").get<std::uint64_t>();
    const std::size_t nch = set.n_rx * set.n_tx;
    set.h0 = read_channel(read_blob(dir, m.at("h0"), 2 * nch), set.n_rx, set.n_tx);
    for (const json& e : m.at("entries")) {
      const std::size_t count = e.at("matrices").get<std::size_t>();
      require(count == set.horizon + 1, ErrorKind::Format, "channel set: sequence length disagrees with horizon");
      const std::vector<double> payload = read_blob(dir, e, count * 2 * nch);
      ChannelSequence seq;
      seq.initial = read_channel(payload, set.n_rx, set.n_tx);
      for (std::size_t t = 1; t < count; ++t) {
        seq.steps.push_back(read_channel(std::span(payload).subspan(t * 2 * nch), set.n_rx, set.n_tx));
      }
      set.sequences.push_back(std::move(seq));
    }
    return set;
  });
}

void save_hypernet(const HypernetArchive& model, const fs::path& dir) {
  fs::create_directories(dir);
  const HypernetConfig& c = model.theta.config();
  const auto bytes = encode_doubles(model.theta.flat());
  write_file(dir / "theta.bin", bytes);
  json manifest{{"format", kHypernetTag},
                {"version", kArchiveVersion},
                {"system", {{"n_rx", c.dims.n_rx}, {"n_tx", c.dims.n_tx}, {"layers", c.dims.layers}}},
                {"network", {{"input", c.input_dim()}, {"hidden", c.hidden}, {"output", c.output_dim()},
                             {"output_gain", c.output_gain}, {"output_bias", c.output_bias}}},
                {"training", {{"beta", model.beta}, {"iterations", model.iterations}, {"bank_entries", model.bank_entries}}},
                {"seed", model.seed},
                {"layout", "little-endian f64: w1, b1, w2, b2, w3, b3; weights (out x in) row-major"},
                {"entries", json::array({json{{"file", "theta.bin"}, {"crc32", hex32(crc32_of(bytes))}}})}};
  write_manifest(dir, manifest);
}

HypernetArchive load_hypernet(const fs::path& dir) {
  const json m = read_manifest(dir, kHypernetTag);
  return guarded(dir, [&] {
    HypernetConfig cfg;
    const json& sys = m.at("system");
    cfg.dims = SystemDims{sys.at("n_rx").get<std::size_t>(), sys.at("n_tx").get<std::size_t>(),
                          sys.at("layers").get<std::size_t>()};
    const json& net = m.at("network");
    cfg.hidden = net.at("hidden").get<std::size_t>();
    cfg.output_gain = net.at("output_gain").get<double>();
    cfg.output_bias = net.at("output_bias").get<double>();
    const HypernetParams zeros(cfg);
    const std::vector<double> flat = read_blob(dir, m.at("entries").at(0), zeros.size());
    HypernetArchive a;
    a.theta = HypernetParams(cfg, flat);
    const json& tr = m.at("training");
    a.beta = tr.at("beta").get<double>();
    a.iterations = tr.at("iterations").get<std::size_t>();
    a.bank_entries = tr.at("bank_entries").get<std::size_t>();
    a.seed = m.at("seed").get<std::uint64_t>();
    return a;
  });
}

std::string inspect_archive(const fs::path& dir) {
  const json m = read_manifest(dir, nullptr);
  return guarded(dir, [&] {
    std::ostringstream out;
    out << "archive:   " << dir.string() << "\n";
    out << "format:    " << m.at("format").get<std::string>() << " v" << m.at("version").get<int>() << "\n";
    const json& sys = m.at("system");
    out << "system:    N_r=" << sys.at("n_rx") << " N_u=" << sys.at("n_tx");
    if (sys.contains("layers")) out << " layers=" << sys.at("layers");
    if (sys.contains("constellation")) out << " K=" << sys.at("constellation");
    out << "\n";
    if (m.contains("channel")) {
      const json& ch = m.at("channel");
      out << "channel:   rho=" << ch.at("rho") << " rho_k=" << ch.at("rho_k") << " horizon=" << ch.at("horizon") << "\n";
    }
    if (m.contains("training")) {
      const json& tr = m.at("training");
      out << "training:  beta=" << tr.at("beta") << " iterations=" << tr.at("iterations")
          << " bank_entries=" << tr.at("bank_entries") << "\n";
    }
    out << "seed:      " << m.at("seed") << "\n";
    if (m.contains("pretrain")) {
      const json& p = m.at("pretrain");
      out << "pretrain:  iterations=" << p.at("iterations") << " batch=" << p.at("batch") << " lr=" << p.at("lr")
          << " snr=[" << p.at("snr_min_db") << ", " << p.at("snr_max_db") << "] dB\n";
      out << "sequences: " << m.at("channel").at("n_sequences") << "\n";
    }
    out << "entries:   " << m.at("entries").size() << "\n";
    return out.str();
  });
}

}  // namespace hmlr
