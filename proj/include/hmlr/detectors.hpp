#pragma once

#include <cstddef>

#include "hmlr/linalg.hpp"
#include "hmlr/modem.hpp"

namespace hmlr {

struct DetectionProblem {
  ComplexVector y;
  ComplexMatrix h;
  double sigma2 = 0.0;
  const Constellation& constellation;
};

inline constexpr std::size_t kDefaultMlCap = std::size_t{1} << 20;

// Hard decision of the least-squares estimate.
SymbolVector detect_zf(const DetectionProblem& p);
// Hard decision of (H^H H + sigma^2 I)^{-1} H^H y.
SymbolVector detect_mmse(const DetectionProblem& p);
// Exhaustive argmin ||y - Hx||^2; candidates are visited in row-major index
// order (last user fastest) and the first minimum wins.
SymbolVector detect_ml(const DetectionProblem& p, std::size_t cap = kDefaultMlCap);

double ml_objective(const DetectionProblem& p, std::span<const cdouble> x);

}  // namespace hmlr
