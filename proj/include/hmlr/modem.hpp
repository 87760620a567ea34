#pragma once

#include <cstddef>
#include <vector>

#include "hmlr/linalg.hpp"
#include "hmlr/rng.hpp"

namespace hmlr {

// Square QAM with unit average power. Point k has real level k / L and
// imaginary level k % L (L = sqrt(K)); levels ascend.
class Constellation {
 public:
  std::size_t order() const noexcept { return points_.size(); }
  const ComplexVector& points() const noexcept { return points_; }
  const RealVector& real_levels() const noexcept { return levels_; }
  std::size_t levels_per_axis() const noexcept { return levels_.size(); }

  std::size_t index_of(std::size_t re_level, std::size_t im_level) const {
    return re_level * levels_.size() + im_level;
  }
  // Nearest level; ties go to the lower index.
  std::size_t nearest_level(double v) const;

 private:
  friend Constellation make_qam(std::size_t order);
  RealVector levels_;
  ComplexVector points_;
};

// K in {4, 16, 64}.
Constellation make_qam(std::size_t order);

struct SymbolVector {
  std::vector<std::size_t> indices;
  ComplexVector values;

  std::size_t size() const noexcept { return indices.size(); }
};

SymbolVector sample_symbols(const Constellation& c, std::size_t n_tx, Rng& rng);
SymbolVector symbols_from_indices(const Constellation& c, std::vector<std::size_t> indices);

SymbolVector hard_decision(const Constellation& c, std::span<const cdouble> soft);
// Same decision from a real-composite estimate [Re; Im].
SymbolVector hard_decision_real(const Constellation& c, std::span<const double> soft);

// Number of user symbols whose index differs.
std::size_t symbol_errors(const SymbolVector& truth, const SymbolVector& est);
double ser(std::span<const SymbolVector> truth, std::span<const SymbolVector> est);

}  // namespace hmlr
