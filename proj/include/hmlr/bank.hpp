#pragma once

// Pretrained detector bank and the on-disk archive format shared with
// channel sets.
//
// An archive is a directory holding `manifest.json` plus one binary blob
// per entry. Blobs are little-endian IEEE-754 doubles. A bank blob stores
// the channel (all real parts row-major, then all imaginary parts) followed
// by the flattened detector parameters. A channel-set blob stores the
// matrices H_0..H_T of one sequence back to back in the same channel
// layout. The manifest records the format tag, version, dimensions,
// generation settings and a CRC-32 for every blob.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "hmlr/channel.hpp"
#include "hmlr/hypernet.hpp"
#include "hmlr/mmnet.hpp"
#include "hmlr/modem.hpp"

namespace hmlr {

inline constexpr int kArchiveVersion = 1;

struct BankMeta {
  SystemDims dims;
  std::size_t constellation_order = 4;
  double rho = 0.98;
  double rho_k = 0.6;
  std::size_t horizon = 4;
  std::size_t n_sequences = 0;
  std::uint64_t seed = 0;
  PretrainConfig pretrain;

  bool operator==(const BankMeta&) const = default;
};

struct BankEntry {
  ComplexMatrix channel;
  double sigma2_ref = 0.0;
  MmnetParams params;
  std::size_t sequence = 0;
  std::size_t hop = 0;

  bool operator==(const BankEntry&) const = default;
};

struct ModelBank {
  BankMeta meta;
  std::vector<BankEntry> entries;

  std::size_t size() const noexcept { return entries.size(); }
  bool operator==(const ModelBank&) const = default;
};

// Noise level every entry is anchored at: the midpoint of the pretraining SNR range.
double bank_sigma2_ref(const PretrainConfig& pre, const SystemDims& dims);

struct BankProgress {
  std::size_t done;
  std::size_t total;
  const BankEntry* entry;
  double initial_loss;
  double final_loss;
};

// Generates n_sequences Jakes sequences from h0 and pretrains one detector
// per distinct channel; h0 is trained once, so the bank holds
// n_sequences * horizon + 1 entries (h0 first). meta.rho_k is left at 0;
// callers that know the spatial correlation record it themselves.
ModelBank build_bank(const ComplexMatrix& h0, const JakesConfig& jakes, std::size_t n_sequences,
                     const PretrainConfig& pre, const SystemDims& dims, const Constellation& c, Rng& rng,
                     std::size_t workers = 1, const std::function<void(const BankProgress&)>& progress = {});

void save_bank(const ModelBank& bank, const std::filesystem::path& dir);
ModelBank load_bank(const std::filesystem::path& dir);

struct ChannelSet {
  std::size_t n_rx = 4;
  std::size_t n_tx = 2;
  double rho = 0.98;
  double rho_k = 0.6;
  std::size_t horizon = 4;
  std::uint64_t seed = 0;
  ComplexMatrix h0;
  std::vector<ChannelSequence> sequences;

  bool operator==(const ChannelSet&) const = default;
};

void save_channels(const ChannelSet& set, const std::filesystem::path& dir);
ChannelSet load_channels(const std::filesystem::path& dir);

struct HypernetArchive {
  HypernetParams theta;
  double beta = 0.0;
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
  std::size_t bank_entries = 0;
};

// Single blob `theta.bin` holding the flat hypernetwork parameters (w1, b1, w2, b2, w3, b3).
void save_hypernet(const HypernetArchive& model, const std::filesystem::path& dir);
HypernetArchive load_hypernet(const std::filesystem::path& dir);

// Human-readable summary of an archive manifest (bank or channel set).
std::string inspect_archive(const std::filesystem::path& dir);

// Exposed for tests and tools.
std::uint32_t crc32_of(std::span<const unsigned char> bytes);
std::vector<unsigned char> encode_doubles(std::span<const double> values);
std::vector<double> decode_doubles(std::span<const unsigned char> bytes);

}  // namespace hmlr
