#include "hmlr/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hmlr {

namespace {

template <class T>
Matrix<T> multiply(const Matrix<T>& a, const Matrix<T>& b) {
  require(a.cols() == b.rows(), ErrorKind::Dimension, "matrix product shape mismatch");
  Matrix<T> c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t p = 0; p < a.cols(); ++p) {
      const T aip = a(i, p);
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aip * b(p, j);
    }
  return c;
}

template <class T, class Op>
Matrix<T> elementwise(const Matrix<T>& a, const Matrix<T>& b, Op op) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorKind::Dimension,
          "elementwise shape mismatch");
  Matrix<T> c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) c.data()[i] = op(a.data()[i], b.data()[i]);
  return c;
}

template <class T>
std::vector<T> apply(const Matrix<T>& a, std::span<const T> x) {
  require(a.cols() == x.size(), ErrorKind::Dimension, "matvec shape mismatch");
  std::vector<T> y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    T acc{};
    for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * x[j];
    y[i] = acc;
  }
  return y;
}

}  // namespace

RealMatrix operator*(const RealMatrix& a, const RealMatrix& b) { return multiply(a, b); }
ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) { return multiply(a, b); }
RealMatrix operator+(const RealMatrix& a, const RealMatrix& b) {
  return elementwise(a, b, std::plus<>{});
}
RealMatrix operator-(const RealMatrix& a, const RealMatrix& b) {
  return elementwise(a, b, std::minus<>{});
}
ComplexMatrix operator+(const ComplexMatrix& a, const ComplexMatrix& b) {
  return elementwise(a, b, std::plus<>{});
}
RealMatrix operator*(double s, const RealMatrix& a) {
  RealMatrix c = a;
  for (auto& v : c.values()) v *= s;
  return c;
}
ComplexMatrix operator*(double s, const ComplexMatrix& a) {
  ComplexMatrix c = a;
  for (auto& v : c.values()) v *= s;
  return c;
}

RealVector matvec(const RealMatrix& a, std::span<const double> x) { return apply(a, x); }
ComplexVector matvec(const ComplexMatrix& a, std::span<const cdouble> x) { return apply(a, x); }

ComplexMatrix adjoint(const ComplexMatrix& a) {
  ComplexMatrix t(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) t(c, r) = std::conj(a(r, c));
  return t;
}

double frobenius_norm(const RealMatrix& a) {
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  return std::sqrt(s);
}

double frobenius_norm(const ComplexMatrix& a) {
  double s = 0.0;
  for (const cdouble& v : a.values()) s += std::norm(v);
  return std::sqrt(s);
}

bool all_finite(const RealMatrix& a) {
  return std::all_of(a.values().begin(), a.values().end(), [](double v) { return std::isfinite(v); });
}

bool all_finite(const ComplexMatrix& a) {
  return std::all_of(a.values().begin(), a.values().end(), [](const cdouble& v) {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  });
}

RealMatrix to_real_composite(const ComplexMatrix& h) {
  const std::size_t n = h.rows();
  const std::size_t m = h.cols();
  RealMatrix out(2 * n, 2 * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double re = h(i, j).real();
      const double im = h(i, j).imag();
      out(i, j) = re;
      out(i, j + m) = -im;
      out(i + n, j) = im;
      out(i + n, j + m) = re;
    }
  return out;
}

RealVector to_real_vector(std::span<const cdouble> v) {
  RealVector out(2 * v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = v[i].real();
    out[i + v.size()] = v[i].imag();
  }
  return out;
}

ComplexVector from_real_vector(std::span<const double> v) {
  require(v.size() % 2 == 0, ErrorKind::Dimension, "real-composite vector must have even length");
  const std::size_t n = v.size() / 2;
  ComplexVector out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = {v[i], v[i + n]};
  return out;
}

SymmetricEigen symmetric_eigen(const RealMatrix& input) {
  require(input.rows() == input.cols(), ErrorKind::Dimension, "eigen: matrix must be square");
  const std::size_t n = input.rows();
  RealMatrix a = input;
  RealMatrix v = RealMatrix::identity(n);
  const double scale = std::max(frobenius_norm(input), 1e-300);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) <= 1e-16 * scale) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::hypot(theta, 1.0));
        const double c = 1.0 / std::hypot(t, 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });

  SymmetricEigen out{RealVector(n), RealMatrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

RealMatrix psd_sqrt(const RealMatrix& r) {
  require(r.rows() == r.cols(), ErrorKind::Dimension, "psd_sqrt: matrix must be square");
  const std::size_t n = r.rows();
  const double scale = std::max(1.0, frobenius_norm(r));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(r(i, j) - r(j, i)) > 1e-12 * scale)
        fail(ErrorKind::NonSymmetric, "psd_sqrt: input is not symmetric");

  const SymmetricEigen eig = symmetric_eigen(r);
  RealVector root(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (eig.values[k] < -1e-10 * scale) fail(ErrorKind::NonPsd, "psd_sqrt: negative eigenvalue");
    root[k] = std::sqrt(std::max(eig.values[k], 0.0));
  }

  RealMatrix s(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += eig.vectors(i, k) * root[k] * eig.vectors(j, k);
      s(i, j) = acc;
      s(j, i) = acc;
    }
  return s;
}

RealVector solve_regularized(const RealMatrix& a, double lambda, std::span<const double> b) {
  require(a.rows() == b.size(), ErrorKind::Dimension, "solve_regularized: rhs length mismatch");
  require(lambda >= 0.0 && std::isfinite(lambda), ErrorKind::Domain,
          "solve_regularized: lambda must be finite and non-negative");
  const std::size_t n = a.cols();

  RealMatrix normal(n, n);
  RealVector rhs(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.rows(); ++k) acc += a(k, i) * a(k, j);
      normal(i, j) = acc;
      normal(j, i) = acc;
    }
    normal(i, i) += lambda;
    for (std::size_t k = 0; k < a.rows(); ++k) rhs[i] += a(k, i) * b[k];
  }

  double trace = 0.0;
  for (std::size_t i = 0; i < n; ++i) trace += normal(i, i);
  const double tiny = 1e-13 * std::max(trace, 1e-300);

  // In-place Cholesky, lower factor.
  RealMatrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = normal(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > tiny)) fail(ErrorKind::Singular, "solve_regularized: normal matrix is singular");
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = normal(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }

  RealVector z(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = rhs[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * z[k];
    z[i] = s / l(i, i);
  }
  RealVector x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = z[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
    x[ii] = s / l(ii, ii);
  }
  return x;
}

}  // namespace hmlr
