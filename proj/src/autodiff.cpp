#include "hmlr/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hmlr/errors.hpp"
#include "hmlr/kernels.hpp"

namespace hmlr::ad {

std::string to_string(Shape s) { return std::to_string(s.rows) + "x" + std::to_string(s.cols); }

Shape Var::shape() const { return tape_->shape_of(id_); }
std::span<const double> Var::value() const { return tape_->value_of(id_); }

double Var::item() const {
  require(shape().size() == 1, ErrorKind::Dimension, "item() on non-scalar tensor " + to_string(shape()));
  return value()[0];
}

Var Tape::leaf(Shape shape, std::vector<double> value, bool needs_grad) {
  require(value.size() == shape.size(), ErrorKind::Dimension,
          "leaf value size does not match shape " + to_string(shape));
  Node n;
  n.shape = shape;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Shape shape, std::vector<double> value) { return leaf(shape, std::move(value), false); }
Var Tape::constant(Shape shape, std::span<const double> value) {
  return leaf(shape, std::vector<double>(value.begin(), value.end()), false);
}
Var Tape::parameter(Shape shape, std::vector<double> value) { return leaf(shape, std::move(value), true); }
Var Tape::parameter(Shape shape, std::span<const double> value) {
  return leaf(shape, std::vector<double>(value.begin(), value.end()), true);
}

Var Tape::push(Shape shape, std::vector<double> value, std::vector<std::size_t> inputs, BackwardFn fn) {
  Node n;
  n.shape = shape;
  n.value = std::move(value);
  n.needs_grad = std::any_of(inputs.begin(), inputs.end(), [&](std::size_t i) { return nodes_[i].needs_grad; });
  n.inputs = std::move(inputs);
  if (n.needs_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

std::span<double> Tape::grad_sink(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.needs_grad) return {};
  if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

void Tape::backward(Var root) {
  require(root.tape_ == this, ErrorKind::Domain, "backward: variable belongs to another tape");
  require(!backward_done_, ErrorKind::Domain, "backward: tape already consumed");
  require(nodes_[root.id_].shape.size() == 1, ErrorKind::Dimension, "backward: root must be scalar");
  backward_done_ = true;
  if (!nodes_[root.id_].needs_grad) return;
  grad_sink(root.id_)[0] = 1.0;
  for (std::size_t i = root.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.empty()) continue;
    n.backward(*this, i);
  }
}

std::span<const double> Tape::grad(Var v) {
  require(v.tape_ == this, ErrorKind::Domain, "grad: variable belongs to another tape");
  require(nodes_[v.id_].needs_grad, ErrorKind::Domain, "grad: variable does not require a gradient");
  return grad_sink(v.id_);
}

namespace {

void same_tape(Var a, Var b) {
  require(&a.tape() == &b.tape(), ErrorKind::Domain, "operands live on different tapes");
}

// Maps an output coordinate onto a broadcast operand.
struct Broadcast {
  std::size_t rows, cols;
  std::size_t at(std::size_t i, std::size_t j) const {
    return (rows == 1 ? 0 : i) * cols + (cols == 1 ? 0 : j);
  }
};

Shape broadcast_shape(Shape a, Shape b, const char* op) {
  const Shape out{std::max(a.rows, b.rows), std::max(a.cols, b.cols)};
  auto ok = [&](Shape s) {
    return (s.rows == out.rows || s.rows == 1) && (s.cols == out.cols || s.cols == 1);
  };
  if (!ok(a) || !ok(b)) {
    fail(ErrorKind::Dimension, std::string(op) + ": cannot broadcast " + to_string(a) + " with " + to_string(b));
  }
  return out;
}

enum class BinOp { Add, Sub, Mul };

Var binary(Var a, Var b, BinOp op, const char* name) {
  same_tape(a, b);
  Tape& t = a.tape();
  const Shape sa = a.shape();
  const Shape sb = b.shape();
  const Shape out = broadcast_shape(sa, sb, name);
  const Broadcast ba{sa.rows, sa.cols};
  const Broadcast bb{sb.rows, sb.cols};
  const auto av = a.value();
  const auto bv = b.value();
  std::vector<double> v(out.size());
  for (std::size_t i = 0; i < out.rows; ++i)
    for (std::size_t j = 0; j < out.cols; ++j) {
      const double x = av[ba.at(i, j)];
      const double y = bv[bb.at(i, j)];
      double r = 0.0;
      switch (op) {
        case BinOp::Add: r = x + y; break;
        case BinOp::Sub: r = x - y; break;
        case BinOp::Mul: r = x * y; break;
      }
      v[i * out.cols + j] = r;
    }
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  return t.push(out, std::move(v), {ia, ib}, [=](Tape& tp, std::size_t self) {
    const auto g = tp.grad_of(self);
    const auto ga = tp.grad_sink(ia);
    const auto gb = tp.grad_sink(ib);
    const auto xa = tp.value_of(ia);
    const auto xb = tp.value_of(ib);
    for (std::size_t i = 0; i < out.rows; ++i)
      for (std::size_t j = 0; j < out.cols; ++j) {
        const double gij = g[i * out.cols + j];
        const std::size_t ka = ba.at(i, j);
        const std::size_t kb = bb.at(i, j);
        switch (op) {
          case BinOp::Add:
            if (!ga.empty()) ga[ka] += gij;
            if (!gb.empty()) gb[kb] += gij;
            break;
          case BinOp::Sub:
            if (!ga.empty()) ga[ka] += gij;
            if (!gb.empty()) gb[kb] -= gij;
            break;
          case BinOp::Mul:
            if (!ga.empty()) ga[ka] += gij * xb[kb];
            if (!gb.empty()) gb[kb] += gij * xa[ka];
            break;
        }
      }
  });
}

// Elementwise unary op given value and derivative-from-(input, output).
template <class F, class D>
Var unary(Var a, F f, D df) {
  Tape& t = a.tape();
  const auto av = a.value();
  std::vector<double> v(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) v[i] = f(av[i]);
  const std::size_t ia = a.id();
  return t.push(a.shape(), std::move(v), {ia}, [=](Tape& tp, std::size_t self) {
    const auto g = tp.grad_of(self);
    const auto y = tp.value_of(self);
    const auto x = tp.value_of(ia);
    const auto ga = tp.grad_sink(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * df(x[i], y[i]);
  });
}

}  // namespace

Var add(Var a, Var b) { return binary(a, b, BinOp::Add, "add"); }
Var sub(Var a, Var b) { return binary(a, b, BinOp::Sub, "sub"); }
Var mul(Var a, Var b) { return binary(a, b, BinOp::Mul, "mul"); }

Var scale(Var a, double c) {
  return unary(a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Var add_scalar(Var a, double c) {
  return unary(a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Var neg(Var a) { return scale(a, -1.0); }

Var matmul(Var a, Var b) {
  same_tape(a, b);
  const Shape sa = a.shape();
  const Shape sb = b.shape();
  require(sa.cols == sb.rows, ErrorKind::Dimension, "matmul: " + to_string(sa) + " x " + to_string(sb));
  const std::size_t m = sa.rows, k = sa.cols, n = sb.cols;
  std::vector<double> v(m * n, 0.0);
  kernels::active().gemm_nn(m, n, k, a.value().data(), b.value().data(), v.data());
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().push({m, n}, std::move(v), {ia, ib}, [=](Tape& tp, std::size_t self) {
    const auto& kt = kernels::active();
    const double* g = tp.grad_of(self).data();
    if (auto ga = tp.grad_sink(ia); !ga.empty()) kt.gemm_nt(m, k, n, g, tp.value_of(ib).data(), ga.data());
    if (auto gb = tp.grad_sink(ib); !gb.empty()) kt.gemm_tn(k, n, m, tp.value_of(ia).data(), g, gb.data());
  });
}

Var matmul_nt(Var a, Var b) {
  same_tape(a, b);
  const Shape sa = a.shape();
  const Shape sb = b.shape();
  require(sa.cols == sb.cols, ErrorKind::Dimension,
          "matmul_nt: " + to_string(sa) + " x " + to_string(sb) + "^T");
  const std::size_t m = sa.rows, k = sa.cols, n = sb.rows;
  std::vector<double> v(m * n, 0.0);
  kernels::active().gemm_nt(m, n, k, a.value().data(), b.value().data(), v.data());
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().push({m, n}, std::move(v), {ia, ib}, [=](Tape& tp, std::size_t self) {
    const auto& kt = kernels::active();
    const double* g = tp.grad_of(self).data();
    if (auto ga = tp.grad_sink(ia); !ga.empty()) kt.gemm_nn(m, k, n, g, tp.value_of(ib).data(), ga.data());
    if (auto gb = tp.grad_sink(ib); !gb.empty()) kt.gemm_tn(n, k, m, g, tp.value_of(ia).data(), gb.data());
  });
}

Var matvec(Var mats, Var x, std::size_t rows) {
  same_tape(mats, x);
  const Shape sm = mats.shape();
  const Shape sx = x.shape();
  const std::size_t batch = sx.rows;
  const std::size_t cols = sx.cols;
  require(rows > 0 && sm.cols == rows * cols && (sm.rows == batch || sm.rows == 1), ErrorKind::Dimension,
          "matvec: matrices " + to_string(sm) + " incompatible with vectors " + to_string(sx));
  const std::size_t stride = sm.rows == 1 ? 0 : rows * cols;
  std::vector<double> v(batch * rows, 0.0);
  kernels::active().batched_matvec(batch, rows, cols, mats.value().data(), stride, x.value().data(), v.data());
  const std::size_t im = mats.id(), ix = x.id();
  return mats.tape().push({batch, rows}, std::move(v), {im, ix}, [=](Tape& tp, std::size_t self) {
    const auto& kt = kernels::active();
    const double* g = tp.grad_of(self).data();
    if (auto gx = tp.grad_sink(ix); !gx.empty())
      kt.batched_matvec_t(batch, rows, cols, tp.value_of(im).data(), stride, g, gx.data());
    if (auto gm = tp.grad_sink(im); !gm.empty())
      kt.batched_outer(batch, rows, cols, g, tp.value_of(ix).data(), gm.data(), stride);
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value()) s += v;
  const std::size_t ia = a.id();
  return a.tape().push({1, 1}, {s}, {ia}, [=](Tape& tp, std::size_t self) {
    const double g = tp.grad_of(self)[0];
    for (double& v : tp.grad_sink(ia)) v += g;
  });
}

Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(a.shape().size())); }

Var square(Var a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var abs(Var a) {
  return unary(
      a, [](double x) { return std::abs(x); },
      [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Var exp(Var a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var max_const(Var a, double c) {
  return unary(
      a, [c](double x) { return std::max(x, c); }, [c](double x, double) { return x > c ? 1.0 : 0.0; });
}

double elu_value(double v, double alpha) { return v > 0.0 ? v : alpha * std::expm1(v); }

Var elu(Var a, double alpha) {
  return unary(
      a, [alpha](double x) { return elu_value(x, alpha); },
      [alpha](double x, double y) { return x > 0.0 ? 1.0 : y + alpha; });
}

double softplus_value(double v) { return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); }

double softplus_inverse(double y) {
  require(y > 0.0, ErrorKind::Domain, "softplus_inverse: argument must be positive");
  return y > 30.0 ? y + std::log(-std::expm1(-y)) : std::log(std::expm1(y));
}

Var softplus(Var a) {
  return unary(a, softplus_value, [](double x, double) {
    // logistic(x)
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  });
}

Var concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), ErrorKind::Dimension, "concat_cols: no inputs");
  Tape& t = parts.front().tape();
  const std::size_t rows = parts.front().shape().rows;
  std::vector<std::size_t> ids;
  std::vector<std::size_t> offsets;
  std::size_t cols = 0;
  for (const Var& p : parts) {
    require(&p.tape() == &t, ErrorKind::Domain, "concat_cols: operands live on different tapes");
    require(p.shape().rows == rows, ErrorKind::Dimension, "concat_cols: row count mismatch");
    ids.push_back(p.id());
    offsets.push_back(cols);
    cols += p.shape().cols;
  }
  std::vector<double> v(rows * cols);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto pv = parts[k].value();
    const std::size_t pc = parts[k].shape().cols;
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(pv.data() + r * pc, pc, v.data() + r * cols + offsets[k]);
  }
  return t.push({rows, cols}, std::move(v), ids, [=](Tape& tp, std::size_t self) {
    const auto g = tp.grad_of(self);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      auto gk = tp.grad_sink(ids[k]);
      if (gk.empty()) continue;
      const std::size_t pc = tp.shape_of(ids[k]).cols;
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < pc; ++c) gk[r * pc + c] += g[r * cols + offsets[k] + c];
    }
  });
}

Var reshape(Var a, Shape shape) {
  require(shape.size() == a.shape().size(), ErrorKind::Dimension,
          "reshape: " + to_string(a.shape()) + " -> " + to_string(shape));
  const auto av = a.value();
  const std::size_t ia = a.id();
  return a.tape().push(shape, std::vector<double>(av.begin(), av.end()), {ia}, [=](Tape& tp, std::size_t self) {
    const auto g = tp.grad_of(self);
    auto ga = tp.grad_sink(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var slice_cols(Var a, std::size_t start, std::size_t count) {
  const Shape s = a.shape();
  require(start + count <= s.cols, ErrorKind::Dimension, "slice_cols: range exceeds " + to_string(s));
  std::vector<double> v(s.rows * count);
  const auto av = a.value();
  for (std::size_t r = 0; r < s.rows; ++r) std::copy_n(av.data() + r * s.cols + start, count, v.data() + r * count);
  const std::size_t ia = a.id();
  return a.tape().push({s.rows, count}, std::move(v), {ia}, [=](Tape& tp, std::size_t self) {
    const auto g = tp.grad_of(self);
    auto ga = tp.grad_sink(ia);
    for (std::size_t r = 0; r < s.rows; ++r)
      for (std::size_t c = 0; c < count; ++c) ga[r * s.cols + start + c] += g[r * count + c];
  });
}

namespace {

// Posterior weights p_s for one scalar; returns the posterior mean.
double posterior(double z, double var, std::span<const double> levels, double* weights) {
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < levels.size(); ++s) {
    const double d = z - levels[s];
    weights[s] = -(d * d) / var;
    top = std::max(top, weights[s]);
  }
  double total = 0.0;
  for (std::size_t s = 0; s < levels.size(); ++s) {
    weights[s] = std::exp(weights[s] - top);
    total += weights[s];
  }
  double mean = 0.0;
  for (std::size_t s = 0; s < levels.size(); ++s) {
    weights[s] /= total;
    mean += weights[s] * levels[s];
  }
  return mean;
}

constexpr std::size_t kMaxLevels = 16;

void check_levels(std::span<const double> levels) {
  require(!levels.empty() && levels.size() <= kMaxLevels, ErrorKind::Dimension,
          "gaussian_denoise: need 1..16 levels");
}

void check_var(double var) {
  if (!(var > 0.0) || !std::isfinite(var)) fail(ErrorKind::Domain, "gaussian_denoise: variance must be positive and finite");
}

}  // namespace

double gaussian_denoise_value(double z, double var, std::span<const double> levels) {
  check_levels(levels);
  check_var(var);
  double w[kMaxLevels];
  return posterior(z, var, levels, w);
}

Var gaussian_denoise(Var z, Var var, std::span<const double> levels_in) {
  same_tape(z, var);
  check_levels(levels_in);
  const Shape sz = z.shape();
  const Shape sv = var.shape();
  require(broadcast_shape(sz, sv, "gaussian_denoise") == sz, ErrorKind::Dimension,
          "gaussian_denoise: variance must broadcast onto z");
  const Broadcast bv{sv.rows, sv.cols};
  const std::vector<double> levels(levels_in.begin(), levels_in.end());
  const auto zv = z.value();
  const auto vv = var.value();
  for (double v : vv) check_var(v);
  std::vector<double> out(sz.size());
  double w[kMaxLevels];
  for (std::size_t i = 0; i < sz.rows; ++i)
    for (std::size_t j = 0; j < sz.cols; ++j)
      out[i * sz.cols + j] = posterior(zv[i * sz.cols + j], vv[bv.at(i, j)], levels, w);

  const std::size_t iz = z.id(), iv = var.id();
  return z.tape().push(sz, std::move(out), {iz, iv}, [=](Tape& tp, std::size_t self) {
    const auto g = tp.grad_of(self);
    const auto zval = tp.value_of(iz);
    const auto vval = tp.value_of(iv);
    auto gz = tp.grad_sink(iz);
    auto gv = tp.grad_sink(iv);
    double p[kMaxLevels];
    for (std::size_t i = 0; i < sz.rows; ++i)
      for (std::size_t j = 0; j < sz.cols; ++j) {
        const std::size_t k = i * sz.cols + j;
        const std::size_t kv = bv.at(i, j);
        const double zk = zval[k];
        const double v = vval[kv];
        const double f = posterior(zk, v, levels, p);
        // df/dtheta = Cov_p(s, de_s/dtheta), e_s = -(z - s)^2 / v
        double cov_z = 0.0, cov_v = 0.0;
        for (std::size_t s = 0; s < levels.size(); ++s) {
          const double d = zk - levels[s];
          const double centered = p[s] * (levels[s] - f);
          cov_z += centered * (-2.0 * d / v);
          cov_v += centered * (d * d / (v * v));
        }
        if (!gz.empty()) gz[k] += g[k] * cov_z;
        if (!gv.empty()) gv[kv] += g[k] * cov_v;
      }
  });
}

}  // namespace hmlr::ad
