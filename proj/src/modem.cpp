#include "hmlr/modem.hpp"

#include <cmath>
#include <string>

namespace hmlr {

Constellation make_qam(std::size_t order) {
  if (order != 4 && order != 16 && order != 64) {
    fail(ErrorKind::Unsupported, "make_qam: unsupported order " + std::to_string(order));
  }
  const auto per_axis = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(order))));

  // Unnormalised levels -(L-1), ..., -1, 1, ..., (L-1); E|s|^2 = 2 * mean(level^2).
  RealVector raw(per_axis);
  double mean_sq = 0.0;
  for (std::size_t i = 0; i < per_axis; ++i) {
    raw[i] = 2.0 * static_cast<double>(i) - static_cast<double>(per_axis - 1);
    mean_sq += raw[i] * raw[i];
  }
  mean_sq /= static_cast<double>(per_axis);
  const double scale = 1.0 / std::sqrt(2.0 * mean_sq);

  Constellation c;
  c.levels_.resize(per_axis);
  for (std::size_t i = 0; i < per_axis; ++i) c.levels_[i] = raw[i] * scale;
  c.points_.reserve(order);
  for (std::size_t re = 0; re < per_axis; ++re)
    for (std::size_t im = 0; im < per_axis; ++im) c.points_.emplace_back(c.levels_[re], c.levels_[im]);
  return c;
}

std::size_t Constellation::nearest_level(double v) const {
  std::size_t best = 0;
  double best_dist = std::abs(v - levels_[0]);
  for (std::size_t i = 1; i < levels_.size(); ++i) {
    const double d = std::abs(v - levels_[i]);
    if (d < best_dist) {
      best = i;
      best_dist = d;
    }
  }
  return best;
}

SymbolVector sample_symbols(const Constellation& c, std::size_t n_tx, Rng& rng) {
  std::vector<std::size_t> idx(n_tx);
  for (auto& i : idx) i = static_cast<std::size_t>(rng.below(c.order()));
  return symbols_from_indices(c, std::move(idx));
}

SymbolVector symbols_from_indices(const Constellation& c, std::vector<std::size_t> indices) {
  SymbolVector s;
  s.values.reserve(indices.size());
  for (std::size_t i : indices) {
    require(i < c.order(), ErrorKind::Domain, "symbol index out of range");
    s.values.push_back(c.points()[i]);
  }
  s.indices = std::move(indices);
  return s;
}

SymbolVector hard_decision(const Constellation& c, std::span<const cdouble> soft) {
  std::vector<std::size_t> idx(soft.size());
  for (std::size_t i = 0; i < soft.size(); ++i) {
    idx[i] = c.index_of(c.nearest_level(soft[i].real()), c.nearest_level(soft[i].imag()));
  }
  return symbols_from_indices(c, std::move(idx));
}

SymbolVector hard_decision_real(const Constellation& c, std::span<const double> soft) {
  require(soft.size() % 2 == 0, ErrorKind::Dimension, "hard_decision_real: odd length");
  const std::size_t n = soft.size() / 2;
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) {
    idx[i] = c.index_of(c.nearest_level(soft[i]), c.nearest_level(soft[i + n]));
  }
  return symbols_from_indices(c, std::move(idx));
}

std::size_t symbol_errors(const SymbolVector& truth, const SymbolVector& est) {
  require(truth.size() == est.size(), ErrorKind::Dimension, "symbol_errors: length mismatch");
  std::size_t errors = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) errors += truth.indices[i] != est.indices[i];
  return errors;
}

double ser(std::span<const SymbolVector> truth, std::span<const SymbolVector> est) {
  require(truth.size() == est.size(), ErrorKind::Dimension, "ser: trial count mismatch");
  std::size_t errors = 0;
  std::size_t total = 0;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    errors += symbol_errors(truth[t], est[t]);
    total += truth[t].size();
  }
  return total == 0 ? 0.0 : static_cast<double>(errors) / static_cast<double>(total);
}

}  // namespace hmlr
