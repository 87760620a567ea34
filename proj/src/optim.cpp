#include "hmlr/optim.hpp"

#include <algorithm>
#include <cmath>

#include "hmlr/errors.hpp"

namespace hmlr {

void ParamStore::add(std::string name, ad::Shape shape, std::span<const double> values) {
  require(!frozen_, ErrorKind::Domain, "ParamStore: layout is frozen");
  require(values.size() == shape.size(), ErrorKind::Dimension, "ParamStore: block '" + name + "' size mismatch");
  for (const Block& b : blocks_) require(b.name != name, ErrorKind::Domain, "ParamStore: duplicate block '" + name + "'");
  blocks_.push_back({std::move(name), shape, values_.size()});
  values_.insert(values_.end(), values.begin(), values.end());
}

const ParamStore::Block& ParamStore::block(const std::string& name) const {
  for (const Block& b : blocks_)
    if (b.name == name) return b;
  fail(ErrorKind::Domain, "ParamStore: no block named '" + name + "'");
}

std::vector<ad::Var> ParamStore::bind(ad::Tape& tape) const {
  std::vector<ad::Var> out;
  out.reserve(blocks_.size());
  for (const Block& b : blocks_) out.push_back(tape.parameter(b.shape, values(b)));
  return out;
}

std::vector<double> ParamStore::gradient(ad::Tape& tape, std::span<const ad::Var> bound) const {
  require(bound.size() == blocks_.size(), ErrorKind::Dimension, "ParamStore::gradient: binding mismatch");
  std::vector<double> g(values_.size());
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    const auto gk = tape.grad(bound[k]);
    std::copy(gk.begin(), gk.end(), g.begin() + static_cast<std::ptrdiff_t>(blocks_[k].offset));
  }
  return g;
}

bool ParamStore::operator==(const ParamStore& other) const {
  if (blocks_.size() != other.blocks_.size() || values_ != other.values_) return false;
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    if (blocks_[k].name != other.blocks_[k].name || !(blocks_[k].shape == other.blocks_[k].shape)) return false;
  }
  return true;
}

AdamState AdamState::init(std::size_t n, const AdamConfig& cfg) {
  return AdamState{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps};
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& s) {
  require(params.size() == grads.size() && params.size() == s.m.size() && s.m.size() == s.v.size(),
          ErrorKind::Dimension, "adam_step: parameter, gradient and state sizes differ");
  ++s.step;
  const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * g;
    s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * g * g;
    const double mhat = s.m[i] / bc1;
    const double vhat = s.v[i] / bc2;
    params[i] -= s.lr * mhat / (std::sqrt(vhat) + s.eps);
  }
}

PlateauScheduler::PlateauScheduler(double initial_lr, const SchedulerConfig& cfg)
    : cfg_(cfg), lr_(initial_lr) {
  require(cfg.factor > 0.0 && cfg.factor < 1.0, ErrorKind::Config, "scheduler: factor must lie in (0, 1)");
  require(cfg.floor <= initial_lr, ErrorKind::Config, "scheduler: floor exceeds initial learning rate");
  require(cfg.patience >= 1 && cfg.check_interval >= 1, ErrorKind::Config,
          "scheduler: patience and check interval must be positive");
}

double PlateauScheduler::update(double current_loss) {
  if (current_loss < best_ * (1.0 - cfg_.threshold)) {
    bad_ = 0;
  } else if (++bad_ >= cfg_.patience) {
    lr_ = std::max(lr_ * cfg_.factor, cfg_.floor);
    bad_ = 0;
  }
  best_ = std::min(best_, current_loss);
  return lr_;
}

}  // namespace hmlr
