#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "hmlr/autodiff.hpp"

namespace hmlr {

// Named flat parameter blocks. The layout (names, shapes, order) is fixed
// once the store is frozen; values change in place.
class ParamStore {
 public:
  struct Block {
    std::string name;
    ad::Shape shape;
    std::size_t offset;
  };

  void add(std::string name, ad::Shape shape, std::span<const double> values);
  void freeze() noexcept { frozen_ = true; }

  const std::vector<Block>& blocks() const noexcept { return blocks_; }
  const Block& block(const std::string& name) const;
  std::size_t total() const noexcept { return values_.size(); }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<const double> values(const Block& b) const {
    return std::span<const double>(values_).subspan(b.offset, b.shape.size());
  }

  // One tape parameter per block, in block order.
  std::vector<ad::Var> bind(ad::Tape& tape) const;
  // Flat gradient in the same order as values().
  std::vector<double> gradient(ad::Tape& tape, std::span<const ad::Var> bound) const;

  bool operator==(const ParamStore& other) const;

 private:
  std::vector<Block> blocks_;
  std::vector<double> values_;
  bool frozen_ = false;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::size_t step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState init(std::size_t n, const AdamConfig& cfg = {});
};

// Bias-corrected Adam update of `params` in place.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

struct SchedulerConfig {
  std::size_t check_interval = 500;
  double factor = 0.9;
  double floor = 1e-6;
  std::size_t patience = 1;
  double threshold = 1e-4;  // relative improvement needed to reset patience
};

class PlateauScheduler {
 public:
  PlateauScheduler(double initial_lr, const SchedulerConfig& cfg = {});

  // Call once per check interval; returns the (possibly reduced) rate.
  double update(double current_loss);

  double lr() const noexcept { return lr_; }
  double best_loss() const noexcept { return best_; }
  std::size_t bad_checks() const noexcept { return bad_; }
  const SchedulerConfig& config() const noexcept { return cfg_; }

 private:
  SchedulerConfig cfg_;
  double lr_;
  double best_ = std::numeric_limits<double>::infinity();
  std::size_t bad_ = 0;
};

}  // namespace hmlr
