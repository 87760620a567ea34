#pragma once

// Hypernetwork g(.; Theta): three dense ELU layers mapping the channel
// features [vec(Re H); vec(Im H); sqrt(sigma2)] to a full set of detector
// parameters. Widths are [d_in, hidden, P] with d_in = 2 N_r N_u + 1.

#include <cstddef>
#include <span>
#include <vector>

#include "hmlr/autodiff.hpp"
#include "hmlr/detectors.hpp"
#include "hmlr/mmnet.hpp"
#include "hmlr/optim.hpp"
#include "hmlr/rng.hpp"

namespace hmlr {

struct HypernetConfig {
  SystemDims dims;
  std::size_t hidden = 100;
  // Generated parameter = gain * elu(.) + bias; widens the (-1, inf) ELU range when needed.
  double output_gain = 1.0;
  double output_bias = 0.0;

  std::size_t input_dim() const noexcept { return 2 * dims.n_rx * dims.n_tx + 1; }
  std::size_t output_dim() const noexcept { return dims.param_count(); }
  bool operator==(const HypernetConfig&) const = default;
};

// Blocks "w1","b1","w2","b2","w3","b3"; weights stored (out x in) row-major.
class HypernetParams {
 public:
  HypernetParams() = default;
  // All-zero parameters.
  explicit HypernetParams(const HypernetConfig& cfg);
  HypernetParams(const HypernetConfig& cfg, std::span<const double> flat);

  const HypernetConfig& config() const noexcept { return cfg_; }
  ParamStore& store() noexcept { return store_; }
  const ParamStore& store() const noexcept { return store_; }
  std::span<const double> flat() const noexcept { return store_.values(); }
  std::span<double> flat() noexcept { return store_.values(); }
  std::size_t size() const noexcept { return store_.total(); }

  bool operator==(const HypernetParams& other) const {
    return cfg_ == other.cfg_ && store_ == other.store_;
  }

 private:
  HypernetConfig cfg_;
  ParamStore store_;
};

// Glorot-uniform weights, zero biases.
HypernetParams hypernet_init(const HypernetConfig& cfg, Rng& rng);

RealVector hypernet_features(const ComplexMatrix& h, double sigma2);

MmnetParams hypernet_forward(const HypernetParams& theta, const ComplexMatrix& h, double sigma2);

// Differentiable forward on a B x d_in feature tensor; returns B x P.
// `bound` comes from theta.store().bind(tape).
ad::Var hypernet_forward(std::span<const ad::Var> bound, ad::Var features, const HypernetConfig& cfg);

SymbolVector hypermimo_detect(const HypernetParams& theta, const DetectionProblem& p);

}  // namespace hmlr
