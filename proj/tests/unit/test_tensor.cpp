#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "millimamba/error.hpp"
#include "millimamba/gradcheck.hpp"
#include "millimamba/nn.hpp"
#include "millimamba/ops.hpp"
#include "millimamba/optim.hpp"
#include "millimamba/params.hpp"

using namespace millimamba;
using namespace millimamba::tensor;

namespace {

std::vector<double> randn(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

Tensor random_param(Shape shape, std::uint64_t seed, double scale = 1.0) {
  return Tensor::parameter(shape, randn(numel(shape), seed, scale));
}

Tensor random_tensor(Shape shape, std::uint64_t seed, double scale = 1.0) {
  return Tensor(shape, randn(numel(shape), seed, scale));
}

// Projects an op's output onto fixed random weights so every output element
// contributes a distinct gradient.
Tensor probe(const Tensor& y, std::uint64_t seed = 99) { return sum(mul(y, random_tensor(y.shape(), seed))); }

void expect_near_all(const Tensor& t, const std::vector<double>& ref, double rel = 1e-12) {
  ASSERT_EQ(t.size(), ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(t[i], ref[i], rel * std::max(1.0, std::abs(ref[i]))) << i;
}

void expect_gradcheck(const std::function<Tensor()>& fn, std::vector<Tensor> params, double tol = 1e-4) {
  GradCheckOptions opt;
  opt.samples = 30;
  opt.tolerance = tol;
  const auto report = grad_check(fn, params, opt);
  EXPECT_TRUE(report.passed) << report.summary();
}

}  // namespace

TEST(Tensor, ShapeValidation) {
  EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), ValidationError);
  EXPECT_THROW(Tensor::zeros({2, 0}), ValidationError);
  EXPECT_EQ(Tensor::full({2, 2}, 3.0).data()[3], 3.0);
  EXPECT_THROW(Tensor::zeros({2}).item(), ValidationError);
}

TEST(Ops, ElementwiseMatchReference) {
  const auto a = random_tensor({3, 4}, 1), b = random_tensor({3, 4}, 2), row = random_tensor({4}, 3);
  std::vector<double> r(12);
  for (std::size_t i = 0; i < 12; ++i) r[i] = a[i] + b[i];
  expect_near_all(add(a, b), r);
  for (std::size_t i = 0; i < 12; ++i) r[i] = a[i] - row[i % 4];
  expect_near_all(sub(a, row), r);
  for (std::size_t i = 0; i < 12; ++i) r[i] = a[i] * b[i];
  expect_near_all(mul(a, b), r);
  for (std::size_t i = 0; i < 12; ++i) r[i] = a[i] * 2.5;
  expect_near_all(scale(a, 2.5), r);
  for (std::size_t i = 0; i < 12; ++i) r[i] = a[i] + 0.5;
  expect_near_all(add_scalar(a, 0.5), r);
  for (std::size_t i = 0; i < 12; ++i) r[i] = std::exp(a[i]);
  expect_near_all(exp(a), r);
  for (std::size_t i = 0; i < 12; ++i) r[i] = 1.0 / (1.0 + std::exp(-a[i]));
  expect_near_all(sigmoid(a), r);
  for (std::size_t i = 0; i < 12; ++i) r[i] = a[i] / (1.0 + std::exp(-a[i]));
  expect_near_all(silu(a), r);
  for (std::size_t i = 0; i < 12; ++i) r[i] = std::log1p(std::exp(a[i]));
  expect_near_all(softplus(a), r);
  for (std::size_t i = 0; i < 12; ++i) r[i] = a[i] * a[i];
  expect_near_all(square(a), r);
  EXPECT_THROW(add(a, random_tensor({3}, 4)), ValidationError);
}

TEST(Ops, MatmulMatchesReferenceAndIdentity) {
  const auto a = random_tensor({2, 3, 4}, 5), b = random_tensor({4, 5}, 6);
  const auto y = matmul(a, b);
  ASSERT_EQ(y.shape(), (Shape{2, 3, 5}));
  std::vector<double> r(30, 0.0);
  for (std::size_t bt = 0; bt < 2; ++bt)
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 5; ++j)
        for (std::size_t k = 0; k < 4; ++k) r[(bt * 3 + i) * 5 + j] += a[(bt * 3 + i) * 4 + k] * b[k * 5 + j];
  expect_near_all(y, r);

  const auto bt = random_tensor({2, 5, 4}, 7);
  const auto yt = matmul(a, bt, true);
  std::vector<double> rt(30, 0.0);
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 5; ++j)
        for (std::size_t k = 0; k < 4; ++k) rt[(n * 3 + i) * 5 + j] += a[(n * 3 + i) * 4 + k] * bt[(n * 5 + j) * 4 + k];
  expect_near_all(yt, rt);

  const Tensor eye({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  const auto m = random_tensor({3, 3}, 8);
  const auto im = matmul(eye, m);
  for (std::size_t i = 0; i < 9; ++i) EXPECT_EQ(im[i], m[i]);
  EXPECT_THROW(matmul(a, random_tensor({3, 5}, 9)), ValidationError);
}

TEST(Ops, Conv3dMatchesReference) {
  const auto x = random_tensor({2, 3, 5, 4}, 10), w = random_tensor({3, 2, 3, 3, 1}, 11), b = random_tensor({3}, 12);
  Conv3dOptions opt;
  opt.stride = {1, 2, 1};
  opt.pad = {1, 1, 0};
  const auto y = conv3d(x, w, b, opt);
  const std::size_t od = 3, oh = 3, ow = 4;
  ASSERT_EQ(y.shape(), (Shape{3, od, oh, ow}));
  for (std::size_t co = 0; co < 3; ++co)
    for (std::size_t d = 0; d < od; ++d)
      for (std::size_t h = 0; h < oh; ++h)
        for (std::size_t q = 0; q < ow; ++q) {
          double acc = b[co];
          for (std::size_t ci = 0; ci < 2; ++ci)
            for (std::size_t kd = 0; kd < 3; ++kd)
              for (std::size_t kh = 0; kh < 3; ++kh) {
                const long id = static_cast<long>(d + kd) - 1, ih = static_cast<long>(2 * h + kh) - 1;
                if (id < 0 || id >= 3 || ih < 0 || ih >= 5) continue;
                acc += x[((ci * 3 + id) * 5 + ih) * 4 + q] * w[((co * 2 + ci) * 3 + kd) * 3 + kh];
              }
          EXPECT_NEAR(y[((co * od + d) * oh + h) * ow + q], acc, 1e-12 * std::max(1.0, std::abs(acc)));
        }
}

TEST(Ops, Conv3dUnitKernelIsIdentity) {
  const auto x = random_tensor({1, 3, 4, 5}, 13);
  const auto y = conv3d_same(x, Tensor::full({1, 1, 1, 1, 1}, 1.0), Tensor());
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(y[i], x[i]);
  EXPECT_THROW(conv3d(x, Tensor::zeros({1, 1, 4, 1, 1}), Tensor(), {}), ValidationError);
}

TEST(Ops, AvgPoolMatchesReference) {
  const auto x = random_tensor({2, 2, 4, 6}, 14);
  const auto y = avg_pool3d(x, {1, 2, 2});
  ASSERT_EQ(y.shape(), (Shape{2, 2, 2, 3}));
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t d = 0; d < 2; ++d)
      for (std::size_t h = 0; h < 2; ++h)
        for (std::size_t w = 0; w < 3; ++w) {
          double acc = 0.0;
          for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j) acc += x[((c * 2 + d) * 4 + 2 * h + i) * 6 + 2 * w + j];
          EXPECT_NEAR(y[((c * 2 + d) * 2 + h) * 3 + w], acc / 4.0, 1e-12);
        }
  EXPECT_THROW(avg_pool3d(random_tensor({1, 1, 3, 4}, 15), {1, 2, 2}), ValidationError);
}

TEST(Ops, LayerNormMatchesReference) {
  const auto x = random_tensor({3, 5}, 16, 3.0), g = random_tensor({5}, 17), b = random_tensor({5}, 18);
  const auto y = layer_norm(x, g, b);
  for (std::size_t r = 0; r < 3; ++r) {
    double mu = 0.0, var = 0.0;
    for (std::size_t i = 0; i < 5; ++i) mu += x[r * 5 + i] / 5.0;
    for (std::size_t i = 0; i < 5; ++i) var += (x[r * 5 + i] - mu) * (x[r * 5 + i] - mu) / 5.0;
    for (std::size_t i = 0; i < 5; ++i) {
      const double ref = (x[r * 5 + i] - mu) / std::sqrt(var + 1e-5) * g[i] + b[i];
      EXPECT_NEAR(y[r * 5 + i], ref, 1e-12 * std::max(1.0, std::abs(ref)));
    }
  }
}

TEST(Ops, SoftmaxRowsSumToOne) {
  const auto x = random_tensor({2, 3, 4}, 19, 5.0);
  for (int axis : {0, 1, -1}) {
    const auto y = softmax(x, axis);
    const std::size_t ax = axis < 0 ? 2 : static_cast<std::size_t>(axis);
    const std::size_t dims[] = {2, 3, 4};
    const std::size_t stride = ax == 0 ? 12 : ax == 1 ? 4 : 1;
    for (std::size_t i = 0; i < 24; ++i) {
      if ((i / stride) % dims[ax] != 0) continue;
      double s = 0.0, mx = -1e300;
      for (std::size_t k = 0; k < dims[ax]; ++k) mx = std::max(mx, x[i + k * stride]);
      double z = 0.0;
      for (std::size_t k = 0; k < dims[ax]; ++k) z += std::exp(x[i + k * stride] - mx);
      for (std::size_t k = 0; k < dims[ax]; ++k) {
        s += y[i + k * stride];
        EXPECT_NEAR(y[i + k * stride], std::exp(x[i + k * stride] - mx) / z, 1e-12);
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
  const auto big = softmax(Tensor({3}, {1000.0, 1000.0, -1000.0}));
  EXPECT_NEAR(big[0], 0.5, 1e-12);
}

TEST(Ops, ShapeOpsMatchReference) {
  const auto x = random_tensor({2, 3, 4}, 20);
  const auto r = reshape(x, {6, 4});
  for (std::size_t i = 0; i < 24; ++i) EXPECT_EQ(r[i], x[i]);
  EXPECT_THROW(reshape(x, {5, 5}), ValidationError);

  const auto p = permute(x, {2, 0, 1});
  ASSERT_EQ(p.shape(), (Shape{4, 2, 3}));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(p[(k * 2 + i) * 3 + j], x[(i * 3 + j) * 4 + k]);

  const auto y = random_tensor({2, 1, 4}, 21);
  const Tensor parts[] = {x, y};
  const auto c = concat(parts, 1);
  ASSERT_EQ(c.shape(), (Shape{2, 4, 4}));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t k = 0; k < 4; ++k) {
      for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(c[(i * 4 + j) * 4 + k], x[(i * 3 + j) * 4 + k]);
      EXPECT_EQ(c[(i * 4 + 3) * 4 + k], y[i * 4 + k]);
    }

  const auto s = slice(x, 2, 1, 3);
  ASSERT_EQ(s.shape(), (Shape{2, 3, 2}));
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t k = 0; k < 2; ++k) EXPECT_EQ(s[i * 2 + k], x[i * 4 + 1 + k]);
  EXPECT_THROW(slice(x, 2, 3, 5), ValidationError);

  const std::size_t idx[] = {1, 1, 0};
  const auto g = gather(reshape(x, {2, 12}), idx);
  ASSERT_EQ(g.shape(), (Shape{3, 12}));
  for (std::size_t k = 0; k < 12; ++k) {
    EXPECT_EQ(g[k], x[12 + k]);
    EXPECT_EQ(g[24 + k], x[k]);
  }
  const std::size_t bad[] = {2};
  EXPECT_THROW(gather(reshape(x, {2, 12}), bad), ValidationError);

  double total = 0.0;
  for (std::size_t i = 0; i < 24; ++i) total += x[i];
  EXPECT_NEAR(sum(x).item(), total, 1e-12);
  EXPECT_NEAR(mean(x).item(), total / 24.0, 1e-12);
  const auto sa = sum_axis(x, 1);
  ASSERT_EQ(sa.shape(), (Shape{2, 4}));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t k = 0; k < 4; ++k)
      EXPECT_NEAR(sa[i * 4 + k], x[(i * 3) * 4 + k] + x[(i * 3 + 1) * 4 + k] + x[(i * 3 + 2) * 4 + k], 1e-12);
}

TEST(Ops, NonFiniteResultsRaise) {
  EXPECT_THROW(exp(Tensor({1}, {1000.0})), NumericError);
  EXPECT_THROW(mul(Tensor({1}, {1e200}), Tensor({1}, {1e200})), NumericError);
}

TEST(Ops, ForwardIsDeterministic) {
  const auto x = random_tensor({2, 3, 4, 4}, 22), w = random_tensor({3, 2, 3, 3, 3}, 23), b = random_tensor({3}, 24);
  const auto y1 = conv3d_same(x, w, b), y2 = conv3d_same(x, w, b);
  for (std::size_t i = 0; i < y1.size(); ++i) EXPECT_EQ(y1[i], y2[i]);
}

TEST(Gradients, ProductRule) {
  auto x = Tensor::parameter({1}, {2.0}), y = Tensor::parameter({1}, {3.0});
  Tape tape;
  {
    TapeScope scope(tape);
    tape.backward(mul(x, y));
  }
  EXPECT_EQ(x.grad()[0], 3.0);
  EXPECT_EQ(y.grad()[0], 2.0);
}

TEST(Gradients, BackwardRequiresScalarLoss) {
  auto x = random_param({3}, 25);
  Tape tape;
  TapeScope scope(tape);
  EXPECT_THROW(tape.backward(square(x)), ValidationError);
}

TEST(Gradients, NoGradGuardSuspendsRecording) {
  auto x = random_param({3}, 26);
  Tape tape;
  TapeScope scope(tape);
  {
    NoGradGuard guard;
    (void)square(x);
  }
  EXPECT_EQ(tape.size(), 0u);
  (void)square(x);
  EXPECT_EQ(tape.size(), 1u);
}

TEST(Gradients, SoftmaxLossIsStationaryAtOneHotOptimum) {
  auto logits = Tensor::parameter({4}, {0.0, 60.0, 0.0, 0.0});
  const Tensor onehot({4}, {0.0, 1.0, 0.0, 0.0});
  Tape tape;
  {
    TapeScope scope(tape);
    // Squared error between softmax and the one-hot target; with no log op the
    // cross-entropy is probed through the same stationary point.
    const auto diff = sub(softmax(logits), onehot);
    tape.backward(sum(square(diff)));
  }
  for (double g : logits.grad()) EXPECT_NEAR(g, 0.0, 1e-8);
}

TEST(GradCheck, EveryOp) {
  const auto a = random_param({3, 4}, 30), b = random_param({3, 4}, 31), row = random_param({4}, 32);
  expect_gradcheck([&] { return probe(add(a, b)); }, {a, b});
  expect_gradcheck([&] { return probe(sub(a, row)); }, {a, row});
  expect_gradcheck([&] { return probe(mul(a, row)); }, {a, row});
  expect_gradcheck([&] { return probe(scale(a, -1.7)); }, {a});
  expect_gradcheck([&] { return probe(add_scalar(a, 0.3)); }, {a});
  expect_gradcheck([&] { return probe(exp(a)); }, {a});
  expect_gradcheck([&] { return probe(sigmoid(a)); }, {a});
  expect_gradcheck([&] { return probe(silu(a)); }, {a});
  expect_gradcheck([&] { return probe(softplus(a)); }, {a});
  expect_gradcheck([&] { return probe(square(a)); }, {a});
  expect_gradcheck([&] { return probe(softmax(a, 0)); }, {a});
  expect_gradcheck([&] { return probe(softmax(a, -1)); }, {a});
  const auto g = random_param({4}, 33), be = random_param({4}, 34);
  expect_gradcheck([&] { return probe(layer_norm(a, g, be)); }, {a, g, be});
  expect_gradcheck([&] { return probe(reshape(a, {2, 6})); }, {a});
  expect_gradcheck([&] { return probe(permute(a, {1, 0})); }, {a});
  expect_gradcheck([&] { return probe(slice(a, 1, 1, 3)); }, {a});
  expect_gradcheck([&] {
    const Tensor parts[] = {a, b};
    return probe(concat(parts, 0));
  }, {a, b});
  const std::size_t idx[] = {2, 0, 2};
  expect_gradcheck([&] { return probe(gather(a, idx)); }, {a});
  expect_gradcheck([&] { return mean(square(a)); }, {a});
  expect_gradcheck([&] { return probe(sum_axis(a, 0)); }, {a});
}

TEST(GradCheck, MatmulConvPool) {
  const auto a = random_param({2, 3, 4}, 40), b = random_param({4, 5}, 41), bb = random_param({2, 5, 4}, 42);
  expect_gradcheck([&] { return probe(matmul(a, b)); }, {a, b});
  expect_gradcheck([&] { return probe(matmul(a, bb, true)); }, {a, bb});
  const auto x = random_param({2, 3, 4, 4}, 43), w = random_param({3, 2, 3, 3, 3}, 44), bias = random_param({3}, 45);
  Conv3dOptions opt;
  opt.stride = {1, 2, 2};
  opt.pad = {1, 1, 1};
  expect_gradcheck([&] { return probe(conv3d(x, w, bias, opt)); }, {x, w, bias});
  expect_gradcheck([&] { return probe(conv3d_same(x, w, bias)); }, {x, w, bias});
  expect_gradcheck([&] { return probe(avg_pool3d(x, {1, 2, 2})); }, {x});
}

TEST(GradCheck, ThreeLayerMlp) {
  ParamStore store(1);
  const nn::Linear l1(store, "l1", 5, 8), l2(store, "l2", 8, 8), l3(store, "l3", 8, 3);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 0.5);
  for (auto t : store.tensors())
    for (auto& v : t.mutable_data()) v = g(rng);
  const auto x = random_tensor({4, 5}, 3);
  GradCheckOptions opt;
  opt.samples = 50;
  const auto report = grad_check([&] { return probe(l3(silu(l2(silu(l1(x)))))); }, store.tensors(), opt);
  EXPECT_TRUE(report.passed) << report.summary();
  EXPECT_EQ(report.entries.size(), 50u);
}

TEST(GradCheck, SumOfSquaresPassesTightly) {
  const auto x = random_param({10}, 50);
  GradCheckOptions opt;
  opt.tolerance = 1e-6;
  EXPECT_TRUE(grad_check([&] { return sum(square(x)); }, {x}, opt).passed);
}

TEST(GradCheck, DetectsWrongGradient) {
  // A custom op whose backward is deliberately off by a factor of two.
  const auto x = random_param({4}, 51);
  const auto broken = [&] {
    Tensor y(x.shape(), std::vector<double>(x.data().begin(), x.data().end()));
    if (should_record({x})) {
      auto xi = x.shared();
      auto yi = y.shared();
      active_tape()->record(std::span<const Tensor>(&x, 1), y, [xi, yi] {
        if (auto* gx = grad_sink(xi))
          for (std::size_t i = 0; i < gx->size(); ++i) (*gx)[i] += 2.0 * yi->grad[i];
      });
    }
    return probe(y);
  };
  EXPECT_FALSE(grad_check(broken, {x}).passed);
}

TEST(GradCheck, RejectsZeroStep) {
  const auto x = random_param({2}, 52);
  GradCheckOptions opt;
  opt.h = 0.0;
  EXPECT_THROW(grad_check([&] { return sum(x); }, {x}, opt), ValidationError);
}

TEST(Adam, ZeroGradientWithoutDecayLeavesParams) {
  auto p = random_param({3}, 60);
  const auto before = std::vector<double>(p.data().begin(), p.data().end());
  AdamOptions opt;
  opt.weight_decay = 0.0;
  Adam adam(std::span<const Tensor>(&p, 1), opt);
  const std::vector<std::vector<double>> grads{{0.0, 0.0, 0.0}};
  for (int i = 0; i < 3; ++i) adam.step(grads);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(p[i], before[i]);
}

TEST(Adam, FirstStepMovesByLearningRateTimesSign) {
  for (double g : {3.0, -0.02, 1e-3}) {
    auto p = Tensor::parameter({1}, {0.0});
    AdamOptions opt;
    opt.weight_decay = 0.0;
    Adam adam(std::span<const Tensor>(&p, 1), opt);
    const std::vector<std::vector<double>> grads{{g}};
    adam.step(grads);
    // m_hat = g, v_hat = g^2, delta = lr g / (|g| + eps).
    EXPECT_NEAR(p[0], -5e-5 * (g > 0 ? 1.0 : -1.0), 1e-9);
  }
}

TEST(Adam, WeightDecayIsDecoupled) {
  auto p = Tensor::parameter({1}, {2.0});
  AdamOptions opt;
  opt.lr = 0.1;
  opt.weight_decay = 0.5;
  Adam adam(std::span<const Tensor>(&p, 1), opt);
  const std::vector<std::vector<double>> grads{{0.0}};
  adam.step(grads);
  EXPECT_DOUBLE_EQ(p[0], 2.0 - 0.1 * 0.5 * 2.0);
}

TEST(Adam, RejectsShapeMismatch) {
  auto p = random_param({3}, 61);
  Adam adam(std::span<const Tensor>(&p, 1));
  const std::vector<std::vector<double>> grads{{1.0}};
  EXPECT_THROW(adam.step(grads), ValidationError);
}

TEST(Adam, IdenticalRunsAreBitIdentical) {
  const auto run = [] {
    auto p = random_param({5}, 62);
    Adam adam(std::span<const Tensor>(&p, 1), AdamOptions{1e-2});
    const auto target = random_tensor({5}, 63);
    for (int i = 0; i < 20; ++i) {
      p.zero_grad();
      Tape tape;
      TapeScope scope(tape);
      tape.backward(sum(square(sub(p, target))));
      adam.step();
    }
    return std::vector<double>(p.data().begin(), p.data().end());
  };
  EXPECT_EQ(run(), run());
}

TEST(Adam, DecreasesQuadraticMonotonically) {
  auto p = Tensor::parameter({2}, {3.0, -2.0});
  AdamOptions opt;
  opt.lr = 0.05;
  opt.weight_decay = 0.0;
  Adam adam(std::span<const Tensor>(&p, 1), opt);
  double last = 1e300;
  for (int i = 0; i < 40; ++i) {
    p.zero_grad();
    Tape tape;
    TapeScope scope(tape);
    const auto loss = sum(square(p));
    EXPECT_LT(loss.item(), last);
    last = loss.item();
    tape.backward(loss);
    adam.step();
  }
}

TEST(ParamStore, InitializesTruncatedNormalAndZeros) {
  ParamStore store(7);
  const auto w = store.normal("w", {100, 100});
  const auto b = store.constant("b", {10}, 0.0);
  double s = 0.0, s2 = 0.0;
  for (double v : w.data()) {
    EXPECT_LE(std::abs(v), 0.04);
    s += v;
    s2 += v * v;
  }
  EXPECT_NEAR(s / 1e4, 0.0, 1e-3);
  // Truncation at 2 sigma shrinks the standard deviation to about 0.88 sigma.
  EXPECT_NEAR(std::sqrt(s2 / 1e4), 0.02 * 0.88, 1e-3);
  for (double v : b.data()) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(store.constant("b", {1}, 0.0), ValidationError);
}

TEST(Checkpoint, RoundTripsExactly) {
  ParamStore a(1);
  a.normal("encoder.w", {3, 4});
  a.constant("decoder.b", {2}, 0.5);
  std::stringstream ss;
  a.save(ss);
  EXPECT_EQ(ss.str().substr(0, 4), "MMCK");
  ParamStore b(2);
  b.normal("encoder.w", {3, 4});
  b.constant("decoder.b", {2}, 0.0);
  b.load(ss);
  for (std::size_t i = 0; i < 12; ++i) EXPECT_EQ(b.get("encoder.w")[i], a.get("encoder.w")[i]);
  EXPECT_EQ(b.get("decoder.b")[1], 0.5);
}

TEST(Checkpoint, RejectsMismatch) {
  ParamStore a(1);
  a.normal("w", {3, 4});
  std::stringstream ss;
  a.save(ss);
  const std::string bytes = ss.str();
  ParamStore wrong_shape;
  wrong_shape.normal("w", {4, 3});
  std::stringstream s1(bytes);
  EXPECT_THROW(wrong_shape.load(s1), ValidationError);
  ParamStore wrong_name;
  wrong_name.normal("v", {3, 4});
  std::stringstream s2(bytes);
  EXPECT_THROW(wrong_name.load(s2), ValidationError);
  ParamStore extra;
  extra.normal("w", {3, 4});
  extra.normal("u", {1});
  std::stringstream s3(bytes);
  EXPECT_THROW(extra.load(s3), ValidationError);
  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  ParamStore same;
  same.normal("w", {3, 4});
  EXPECT_THROW(same.load(truncated), ValidationError);
}
