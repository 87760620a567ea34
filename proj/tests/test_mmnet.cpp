#include <cmath>

#include "doctest.h"
#include "hmlr/autodiff.hpp"
#include "hmlr/channel.hpp"
#include "hmlr/errors.hpp"
#include "hmlr/mmnet.hpp"
#include "support/fd.hpp"

using namespace hmlr;

namespace {

// Straight-line reimplementation of the detector used as the forward oracle.
RealVector reference_forward(const MmnetParams& w, const ComplexMatrix& h, const ComplexVector& y,
                             const Constellation& c) {
  const RealMatrix hr = to_real_composite(h);
  const RealVector yr = to_real_vector(y);
  const std::size_t nt = hr.cols(), nr = hr.rows();
  RealVector x(nt, 0.0);
  for (std::size_t l = 0; l < w.dims().layers; ++l) {
    RealVector resid(nr);
    for (std::size_t i = 0; i < nr; ++i) {
      double acc = yr[i];
      for (std::size_t j = 0; j < nt; ++j) acc -= hr(i, j) * x[j];
      resid[i] = acc;
    }
    RealVector next(nt);
    for (std::size_t i = 0; i < nt; ++i) {
      double z = x[i];
      for (std::size_t j = 0; j < nr; ++j) z += w.a(l)[i * nr + j] * resid[j];
      const double var = std::log1p(std::exp(w.theta2(l)[i]));
      double num = 0.0, den = 0.0;
      for (double s : c.real_levels()) {
        const double e = std::exp(-(z - s) * (z - s) / var);
        num += s * e;
        den += e;
      }
      next[i] = num / den;
    }
    x = next;
  }
  return x;
}

MmnetParams random_params(const SystemDims& d, Rng& rng, double scale) {
  MmnetParams w(d);
  for (double& v : w.flat()) v = scale * rng.normal();
  return w;
}

}  // namespace

TEST_SUITE("mmnet") {

TEST_CASE("parameter layout") {
  const SystemDims d;
  CHECK(d.param_count() == 216);
  CHECK(d.per_layer() == 36);
  CHECK(d.a_size() == 32);
  std::vector<double> flat(216);
  for (std::size_t i = 0; i < flat.size(); ++i) flat[i] = static_cast<double>(i);
  const MmnetParams w = MmnetParams::unflatten(d, flat);
  CHECK(w.a(0)[0] == 0.0);
  CHECK(w.a(0)[31] == 31.0);
  CHECK(w.theta2(0)[0] == 32.0);
  CHECK(w.theta2(0)[3] == 35.0);
  CHECK(w.a(1)[0] == 36.0);
  CHECK(w.theta2(5)[3] == 215.0);
  CHECK(w.flatten() == flat);
  CHECK_THROWS_AS(MmnetParams::unflatten(d, std::vector<double>(215)), Error);
  CHECK_THROWS_AS((SystemDims{2, 4, 6}.validate()), Error);
}

TEST_CASE("numeric forward agrees with an independent oracle and with the tape") {
  const SystemDims d;
  const Constellation c = make_qam(4);
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const ComplexMatrix h = sample_kronecker(KroneckerConfig{}, rng);
    const MmnetParams w = random_params(d, rng, 0.3);
    const SymbolVector x = sample_symbols(c, 2, rng);
    const ComplexVector y = transmit(h, x.values, NoiseModel::from_snr(7.0, 2, 4), rng);
    const RealVector got = mmnet_forward(w, DetectorInput::make(h, y, 0.1), c);
    const RealVector want = reference_forward(w, h, y, c);
    for (std::size_t i = 0; i < 4; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));

    ad::Tape tape;
    const auto layers = bind_mmnet(tape, w);
    const RealMatrix hr = to_real_composite(h);
    const ad::Var hv = tape.constant({1, hr.size()}, hr.values());
    const ad::Var yv = tape.constant({1, 8}, to_real_vector(y));
    const ad::Var out = mmnet_forward(layers, hv, yv, c.real_levels(), d);
    for (std::size_t i = 0; i < 4; ++i) CHECK(out.value()[i] == doctest::Approx(want[i]).epsilon(1e-12));
  }
}

TEST_CASE("detection is the hard decision of the soft output") {
  const SystemDims d;
  const Constellation c = make_qam(4);
  Rng rng(3);
  const ComplexMatrix h = sample_kronecker(KroneckerConfig{}, rng);
  const MmnetParams w = random_params(d, rng, 0.2);
  const ComplexVector y = transmit(h, sample_symbols(c, 2, rng).values, NoiseModel{0.1, 0}, rng);
  const DetectorInput in = DetectorInput::make(h, y, 0.1);
  CHECK(mmnet_detect(w, in, c).indices == hard_decision_real(c, mmnet_forward(w, in, c)).indices);
  CHECK_THROWS_AS(mmnet_forward(MmnetParams(SystemDims{4, 1, 6}), in, c), Error);
}

TEST_CASE("batch loss gradient matches finite differences") {
  const SystemDims d{4, 2, 3};
  const Constellation c = make_qam(4);
  Rng rng(17);
  const ComplexMatrix h = sample_kronecker(KroneckerConfig{}, rng);
  const FixedChannelBatch batch = draw_fixed_channel_batch(h, 8, 5.0, 10.0, c, rng);
  const MmnetParams w0 = random_params(d, rng, 0.3);

  const RealMatrix hr = to_real_composite(h);
  // Loss through the numeric forward, summed by hand.
  const auto loss_of = [&](const MmnetParams& w) {
    double acc = 0.0;
    for (std::size_t b = 0; b < batch.size; ++b) {
      const DetectorInput in{RealVector(batch.y_real.begin() + 8 * b, batch.y_real.begin() + 8 * (b + 1)), hr, 0.1};
      const RealVector xh = mmnet_forward(w, in, c);
      for (std::size_t i = 0; i < 4; ++i) acc += (xh[i] - batch.x_real[4 * b + i]) * (xh[i] - batch.x_real[4 * b + i]);
    }
    return acc / static_cast<double>(batch.size);
  };
  CHECK(mmnet_batch_loss(w0, h, batch, c) == doctest::Approx(loss_of(w0)).epsilon(1e-12));
  ad::Tape tape;
  const auto layers = bind_mmnet(tape, w0);
  const ad::Var hv = tape.constant({1, hr.size()}, hr.values());
  const ad::Var yv = tape.constant({batch.size, 8}, batch.y_real);
  const ad::Var xv = tape.constant({batch.size, 4}, batch.x_real);
  const ad::Var out = mmnet_forward(layers, hv, yv, c.real_levels(), d);
  const ad::Var loss = ad::scale(ad::sum(ad::square(ad::sub(out, xv))), 1.0 / static_cast<double>(batch.size));
  CHECK(loss.item() == doctest::Approx(loss_of(w0)).epsilon(1e-12));
  tape.backward(loss);
  const std::vector<double> g = mmnet_gradient(tape, layers);
  const auto fd = hmlr::testing::numeric_gradient(
      [&](std::span<const double> flat) { return loss_of(MmnetParams::unflatten(d, flat)); }, w0.flat());
  CHECK(hmlr::testing::relative_error(g, fd) < 1e-6);
}

TEST_CASE("initialization and pretraining") {
  const SystemDims d;
  const Constellation c = make_qam(4);
  Rng rng(8);
  const ComplexMatrix h = sample_kronecker(KroneckerConfig{}, rng);
  const MmnetParams w = mmnet_init(h, d, 0.0, rng);
  const RealMatrix hr = to_real_composite(h);
  double trace = 0.0;
  for (double v : hr.values()) trace += v * v;
  for (std::size_t l = 0; l < d.layers; ++l) {
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 8; ++j) CHECK(w.a(l)[i * 8 + j] == doctest::Approx(hr(j, i) / trace).epsilon(1e-12));
      CHECK(ad::softplus_value(w.theta2(l)[i]) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  PretrainConfig pc;
  pc.iterations = 300;
  pc.batch = 200;
  Rng a(5), b(5);
  const PretrainResult r = pretrain_mmnet(h, pc, d, c, a);
  CHECK(r.final_loss < r.initial_loss);
  CHECK(std::isfinite(r.final_loss));
  CHECK(pretrain_mmnet(h, pc, d, c, b).params == r.params);
}

}  // TEST_SUITE
