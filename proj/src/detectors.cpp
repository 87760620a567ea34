#include "hmlr/detectors.hpp"

#include <limits>
#include <string>

namespace hmlr {

namespace {

void check_dims(const DetectionProblem& p) {
  require(p.h.rows() == p.y.size(), ErrorKind::Dimension, "detector: y length != channel rows");
}

SymbolVector linear_detect(const DetectionProblem& p, double lambda) {
  check_dims(p);
  const RealMatrix hr = to_real_composite(p.h);
  const RealVector yr = to_real_vector(p.y);
  const RealVector xr = solve_regularized(hr, lambda, yr);
  return hard_decision_real(p.constellation, xr);
}

}  // namespace

SymbolVector detect_zf(const DetectionProblem& p) { return linear_detect(p, 0.0); }

SymbolVector detect_mmse(const DetectionProblem& p) {
  require(p.sigma2 >= 0.0, ErrorKind::Domain, "detect_mmse: sigma2 must be non-negative");
  // Composite of H^H H is H_r^T H_r, so the complex regulariser carries over unchanged.
  return linear_detect(p, p.sigma2);
}

double ml_objective(const DetectionProblem& p, std::span<const cdouble> x) {
  const ComplexVector hx = matvec(p.h, x);
  double obj = 0.0;
  for (std::size_t i = 0; i < hx.size(); ++i) obj += std::norm(p.y[i] - hx[i]);
  return obj;
}

SymbolVector detect_ml(const DetectionProblem& p, std::size_t cap) {
  check_dims(p);
  const std::size_t users = p.h.cols();
  const std::size_t k = p.constellation.order();
  std::size_t total = 1;
  for (std::size_t u = 0; u < users; ++u) {
    if (total > cap / k) {
      fail(ErrorKind::SearchSpaceTooLarge,
           "detect_ml: " + std::to_string(k) + "^" + std::to_string(users) + " exceeds cap " +
               std::to_string(cap));
    }
    total *= k;
  }

  // Precompute the column images H_{:,u} s for every user and symbol.
  const std::size_t nr = p.h.rows();
  std::vector<ComplexVector> images(users * k, ComplexVector(nr));
  for (std::size_t u = 0; u < users; ++u)
    for (std::size_t s = 0; s < k; ++s)
      for (std::size_t r = 0; r < nr; ++r)
        images[u * k + s][r] = p.h(r, u) * p.constellation.points()[s];

  std::vector<std::size_t> idx(users, 0);
  std::vector<std::size_t> best(users, 0);
  double best_obj = std::numeric_limits<double>::infinity();
  ComplexVector residual(nr);
  for (std::size_t n = 0; n < total; ++n) {
    std::size_t rem = n;
    for (std::size_t u = users; u-- > 0;) {
      idx[u] = rem % k;
      rem /= k;
    }
    for (std::size_t r = 0; r < nr; ++r) residual[r] = p.y[r];
    for (std::size_t u = 0; u < users; ++u) {
      const ComplexVector& img = images[u * k + idx[u]];
      for (std::size_t r = 0; r < nr; ++r) residual[r] -= img[r];
    }
    double obj = 0.0;
    for (const cdouble& v : residual) obj += std::norm(v);
    if (obj < best_obj) {
      best_obj = obj;
      best = idx;
    }
  }
  return symbols_from_indices(p.constellation, std::move(best));
}

}  // namespace hmlr
