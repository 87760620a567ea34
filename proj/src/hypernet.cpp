#include "hmlr/hypernet.hpp"

#include <cmath>

namespace hmlr {

namespace {

struct LayerShape {
  const char* weight;
  const char* bias;
  std::size_t out;
  std::size_t in;
};

std::vector<LayerShape> layer_shapes(const HypernetConfig& cfg) {
  const std::size_t d = cfg.input_dim();
  return {{"w1", "b1", d, d}, {"w2", "b2", cfg.hidden, d}, {"w3", "b3", cfg.output_dim(), cfg.hidden}};
}

ParamStore make_store(const HypernetConfig& cfg, std::span<const double> flat) {
  ParamStore store;
  std::size_t offset = 0;
  for (const LayerShape& l : layer_shapes(cfg)) {
    const std::size_t nw = l.out * l.in;
    require(offset + nw + l.out <= flat.size(), ErrorKind::Dimension, "HypernetParams: flat vector too short");
    store.add(l.weight, {l.out, l.in}, flat.subspan(offset, nw));
    offset += nw;
    store.add(l.bias, {1, l.out}, flat.subspan(offset, l.out));
    offset += l.out;
  }
  require(offset == flat.size(), ErrorKind::Dimension, "HypernetParams: flat vector too long");
  store.freeze();
  return store;
}

std::size_t flat_size(const HypernetConfig& cfg) {
  std::size_t n = 0;
  for (const LayerShape& l : layer_shapes(cfg)) n += l.out * l.in + l.out;
  return n;
}

}  // namespace

HypernetParams::HypernetParams(const HypernetConfig& cfg)
    : cfg_(cfg), store_(make_store(cfg, std::vector<double>(flat_size(cfg), 0.0))) {}

HypernetParams::HypernetParams(const HypernetConfig& cfg, std::span<const double> flat)
    : cfg_(cfg), store_(make_store(cfg, flat)) {}

HypernetParams hypernet_init(const HypernetConfig& cfg, Rng& rng) {
  cfg.dims.validate();
  HypernetParams theta(cfg);
  auto values = theta.flat();
  for (const ParamStore::Block& b : theta.store().blocks()) {
    if (b.name[0] != 'w') continue;
    const double limit = std::sqrt(6.0 / static_cast<double>(b.shape.rows + b.shape.cols));
    for (std::size_t i = 0; i < b.shape.size(); ++i) values[b.offset + i] = rng.uniform(-limit, limit);
  }
  return theta;
}

RealVector hypernet_features(const ComplexMatrix& h, double sigma2) {
  require(sigma2 >= 0.0, ErrorKind::Domain, "hypernet_features: negative noise variance");
  RealVector f;
  f.reserve(2 * h.size() + 1);
  for (const cdouble& v : h.values()) f.push_back(v.real());
  for (const cdouble& v : h.values()) f.push_back(v.imag());
  f.push_back(std::sqrt(sigma2));
  return f;
}

ad::Var hypernet_forward(std::span<const ad::Var> bound, ad::Var features, const HypernetConfig& cfg) {
  require(bound.size() == 6, ErrorKind::Dimension, "hypernet_forward: expected six parameter blocks");
  require(features.shape().cols == cfg.input_dim(), ErrorKind::Dimension,
          "hypernet_forward: feature width " + std::to_string(features.shape().cols) + " != " +
              std::to_string(cfg.input_dim()));
  ad::Var h = features;
  for (std::size_t l = 0; l < 3; ++l) {
    h = ad::elu(ad::add(ad::matmul_nt(h, bound[2 * l]), bound[2 * l + 1]));
  }
  if (cfg.output_gain != 1.0) h = ad::scale(h, cfg.output_gain);
  if (cfg.output_bias != 0.0) h = ad::add_scalar(h, cfg.output_bias);
  return h;
}

MmnetParams hypernet_forward(const HypernetParams& theta, const ComplexMatrix& h, double sigma2) {
  const HypernetConfig& cfg = theta.config();
  require(h.rows() == cfg.dims.n_rx && h.cols() == cfg.dims.n_tx, ErrorKind::Dimension,
          "hypernet_forward: channel does not match configured system");
  ad::Tape tape;
  std::vector<ad::Var> bound;
  for (const ParamStore::Block& b : theta.store().blocks()) bound.push_back(tape.constant(b.shape, theta.store().values(b)));
  const RealVector f = hypernet_features(h, sigma2);
  const ad::Var out = hypernet_forward(bound, tape.constant({1, f.size()}, f), cfg);
  return MmnetParams::unflatten(cfg.dims, out.value());
}

SymbolVector hypermimo_detect(const HypernetParams& theta, const DetectionProblem& p) {
  const MmnetParams w = hypernet_forward(theta, p.h, p.sigma2);
  return mmnet_detect(w, DetectorInput::make(p.h, p.y, p.sigma2), p.constellation);
}

}  // namespace hmlr
