#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "millimamba/decoder.hpp"
#include "millimamba/error.hpp"
#include "millimamba/gradcheck.hpp"
#include "millimamba/ops.hpp"

using namespace millimamba;
using namespace millimamba::decoder;
using tensor::GradCheckOptions;
using tensor::Shape;

namespace {

std::vector<double> randn(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

Tensor random_tensor(Shape shape, std::uint64_t seed) { return Tensor(shape, randn(tensor::numel(shape), seed)); }
Tensor random_param(Shape shape, std::uint64_t seed) { return Tensor::parameter(shape, randn(tensor::numel(shape), seed)); }

Tensor probe(const Tensor& y, std::uint64_t seed = 55) {
  return tensor::sum(tensor::mul(y, random_tensor(y.shape(), seed)));
}

void jitter(ParamStore& store, std::uint64_t seed, double scale = 0.2) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  for (auto t : store.tensors())
    for (auto& v : t.mutable_data()) v += g(rng);
}

// Query tensor [T][J][d] with row (f, j) replaced by `row`.
Tensor with_row(const Tensor& q, std::size_t f, std::size_t j, const std::vector<double>& row) {
  auto c = q.clone();
  const std::size_t jn = q.dim(1), d = q.dim(2);
  std::copy(row.begin(), row.end(), c.mutable_data().begin() + static_cast<std::ptrdiff_t>((f * jn + j) * d));
  return c;
}

bool rows_equal(const Tensor& a, const Tensor& b, std::size_t f, std::size_t j) {
  const std::size_t jn = a.dim(1), d = a.dim(2);
  for (std::size_t k = 0; k < d; ++k)
    if (a[(f * jn + j) * d + k] != b[(f * jn + j) * d + k]) return false;
  return true;
}

struct Fixture {
  ParamStore store{3};
  MultiHeadAttention mha;
  Fixture() : mha(store, "attn", 8, 2) { jitter(store, 4); }
};

}  // namespace

TEST(Attention, WeightRowsSumToOne) {
  Fixture fx;
  const auto q = random_tensor({3, 5, 8}, 1);
  Tensor w;
  (void)spatial_attention(fx.mha, q, &w);
  ASSERT_EQ(w.shape(), (Shape{3, 2, 5, 5}));
  for (std::size_t r = 0; r < 30; ++r) {
    double s = 0.0;
    for (std::size_t k = 0; k < 5; ++k) s += w[r * 5 + k];
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  const auto mem = random_tensor({7, 8}, 2);
  (void)cross_attention(fx.mha, q, mem, mem, &w);
  ASSERT_EQ(w.shape(), (Shape{1, 2, 15, 7}));
  for (std::size_t r = 0; r < 30; ++r) {
    double s = 0.0;
    for (std::size_t k = 0; k < 7; ++k) s += w[r * 7 + k];
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Attention, MatchesNaiveSingleHead) {
  ParamStore store(5);
  const MultiHeadAttention mha(store, "a", 4, 1);
  jitter(store, 6);
  const auto q = random_tensor({1, 3, 4}, 7), kv = random_tensor({1, 5, 4}, 8);
  const auto y = mha(q, kv, kv);
  const auto lin = [&](const std::string& n, const Tensor& x) {
    return tensor::add(tensor::matmul(x, store.get("a." + n + ".weight")), store.get("a." + n + ".bias"));
  };
  const auto qp = lin("q", q), kp = lin("k", kv), vp = lin("v", kv);
  std::vector<double> ctx(12, 0.0);
  for (std::size_t i = 0; i < 3; ++i) {
    std::vector<double> s(5);
    double mx = -1e300, z = 0.0;
    for (std::size_t j = 0; j < 5; ++j) {
      s[j] = 0.0;
      for (std::size_t k = 0; k < 4; ++k) s[j] += qp[i * 4 + k] * kp[j * 4 + k];
      s[j] /= 2.0;
      mx = std::max(mx, s[j]);
    }
    for (auto& v : s) z += (v = std::exp(v - mx));
    for (std::size_t j = 0; j < 5; ++j)
      for (std::size_t k = 0; k < 4; ++k) ctx[i * 4 + k] += s[j] / z * vp[j * 4 + k];
  }
  const auto ref = lin("o", Tensor({1, 3, 4}, ctx));
  for (std::size_t i = 0; i < 12; ++i) EXPECT_NEAR(y[i], ref[i], 1e-12);
}

TEST(Attention, SpatialIsFrameLocal) {
  Fixture fx;
  const auto q = random_tensor({4, 5, 8}, 10);
  const auto base = spatial_attention(fx.mha, q);
  const auto pert = spatial_attention(fx.mha, with_row(q, 0, 2, randn(8, 11)));
  for (std::size_t f = 1; f < 4; ++f)
    for (std::size_t j = 0; j < 5; ++j) EXPECT_TRUE(rows_equal(base, pert, f, j));
  EXPECT_FALSE(rows_equal(base, pert, 0, 0));
}

TEST(Attention, TemporalIsJointLocal) {
  Fixture fx;
  const auto q = random_tensor({4, 5, 8}, 12);
  const auto base = temporal_attention(fx.mha, q);
  const auto pert = temporal_attention(fx.mha, with_row(q, 1, 0, randn(8, 13)));
  for (std::size_t f = 0; f < 4; ++f)
    for (std::size_t j = 1; j < 5; ++j) EXPECT_TRUE(rows_equal(base, pert, f, j));
  EXPECT_FALSE(rows_equal(base, pert, 3, 0));
}

TEST(Attention, DegenerateAxesReduceToPlainSelfAttention) {
  Fixture fx;
  // T=1 spatial attention and J=1 temporal attention are ordinary self-attention.
  const auto q = random_tensor({1, 5, 8}, 14);
  const auto s = spatial_attention(fx.mha, q), plain = fx.mha(q, q, q);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(s[i], plain[i]);
  const auto qt = random_tensor({6, 1, 8}, 15);
  const auto t = temporal_attention(fx.mha, qt);
  const auto seq = tensor::reshape(qt, {1, 6, 8});
  const auto plain_t = fx.mha(seq, seq, seq);
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(t[i], plain_t[i]);
}

TEST(Attention, SingleTokenGivesItsValueToEveryQuery) {
  Fixture fx;
  // T=1 temporal attention and N_tok=1 cross-attention both have weight 1.
  const auto q = random_tensor({1, 5, 8}, 16);
  Tensor w;
  const auto t = temporal_attention(fx.mha, q, &w);
  for (double v : w.data()) EXPECT_EQ(v, 1.0);
  const auto mem = random_tensor({1, 8}, 17);
  const auto c = cross_attention(fx.mha, random_tensor({2, 3, 8}, 18), mem, mem);
  for (std::size_t r = 1; r < 6; ++r)
    for (std::size_t k = 0; k < 8; ++k) EXPECT_NEAR(c[r * 8 + k], c[k], 1e-12);
  // Same output whatever the queries are.
  const auto c2 = cross_attention(fx.mha, random_tensor({2, 3, 8}, 19), mem, mem);
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_NEAR(c2[i], c[i], 1e-12);
}

TEST(Attention, SpatialIsPermutationEquivariant) {
  Fixture fx;
  const auto q = random_tensor({2, 5, 8}, 20);
  const std::size_t perm[] = {3, 0, 4, 1, 2};
  auto qp = q.clone();
  for (std::size_t f = 0; f < 2; ++f)
    for (std::size_t j = 0; j < 5; ++j)
      for (std::size_t k = 0; k < 8; ++k) qp.mutable_data()[(f * 5 + j) * 8 + k] = q[(f * 5 + perm[j]) * 8 + k];
  const auto y = spatial_attention(fx.mha, q), yp = spatial_attention(fx.mha, qp);
  for (std::size_t f = 0; f < 2; ++f)
    for (std::size_t j = 0; j < 5; ++j)
      for (std::size_t k = 0; k < 8; ++k) EXPECT_NEAR(yp[(f * 5 + j) * 8 + k], y[(f * 5 + perm[j]) * 8 + k], 1e-12);
}

TEST(Attention, RejectsDimMismatch) {
  Fixture fx;
  EXPECT_THROW(spatial_attention(fx.mha, random_tensor({2, 3, 6}, 21)), ValidationError);
  ParamStore store;
  EXPECT_THROW(MultiHeadAttention(store, "bad", 10, 3), ValidationError);
}

TEST(DecoderLayer, GradCheck) {
  DecoderConfig cfg;
  cfg.layers = 1;
  cfg.heads = 2;
  cfg.d_model = 8;
  cfg.joints = 3;
  cfg.frames = 3;
  cfg.memory_dim = 8;
  ParamStore store(30);
  const DecoderLayer layer(store, "decoder.layer.0", cfg);
  jitter(store, 31);
  auto q = random_param({3, 3, 8}, 32), mem = random_param({6, 8}, 33), keys = random_param({6, 8}, 34);
  auto params = store.tensors();
  params.insert(params.end(), {q, mem, keys});
  GradCheckOptions opt;
  opt.samples = 60;
  const auto report = tensor::grad_check([&] { return probe(layer(q, keys, mem)); }, params, opt);
  EXPECT_TRUE(report.passed) << report.summary();
}

TEST(Decoder, OutputShapesAndRange) {
  DecoderConfig cfg;
  cfg.frames = 9;
  for (Strategy s : {Strategy::kManyToMany, Strategy::kManyToOne}) {
    cfg.strategy = s;
    ParamStore store(40);
    const Decoder dec(store, cfg);
    jitter(store, 41, 1.0);
    const auto y = dec.decode(random_tensor({20, 32}, 42), random_tensor({20, 32}, 43));
    EXPECT_EQ(y.shape(), (Shape{s == Strategy::kManyToMany ? 9u : 1u, 14, 2}));
    for (double v : y.data()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Decoder, ParameterNames) {
  ParamStore store;
  DecoderConfig cfg;
  const Decoder dec(store, cfg);
  for (const char* name : {"decoder.queries", "decoder.layer.0.sa.q.weight", "decoder.layer.2.ta.o.bias",
                            "decoder.layer.1.ca.k.weight", "decoder.layer.0.mlp.fc1.weight", "decoder.head.fc2.bias"})
    EXPECT_TRUE(store.contains(name)) << name;
  EXPECT_EQ(store.get("decoder.queries").shape(), (Shape{3, 14, 32}));
  ParamStore one;
  cfg.strategy = Strategy::kManyToOne;
  const Decoder m2o(one, cfg);
  EXPECT_EQ(one.get("decoder.queries").shape(), (Shape{1, 14, 32}));
  EXPECT_FALSE(one.contains("decoder.layer.0.ta.q.weight"));
}

TEST(Decoder, IsDeterministic) {
  ParamStore a(50), b(50);
  const Decoder da(a, DecoderConfig{}), db(b, DecoderConfig{});
  const auto mem = random_tensor({12, 32}, 51), pos = random_tensor({12, 32}, 52);
  const auto ya = da.decode(mem, pos), yb = db.decode(mem, pos);
  for (std::size_t i = 0; i < ya.size(); ++i) EXPECT_EQ(ya[i], yb[i]);
}

TEST(Decoder, FullGradCheck) {
  DecoderConfig cfg;
  cfg.layers = 2;
  cfg.heads = 2;
  cfg.d_model = 8;
  cfg.joints = 3;
  cfg.frames = 3;
  cfg.memory_dim = 6;
  ParamStore store(60);
  const Decoder dec(store, cfg);
  jitter(store, 61);
  auto mem = random_param({5, 6}, 62);
  const auto pos = random_tensor({5, 6}, 63);
  auto params = store.tensors();
  params.push_back(mem);
  GradCheckOptions opt;
  opt.samples = 60;
  opt.tolerance = 1e-3;
  const auto report = tensor::grad_check([&] { return probe(dec.decode(mem, pos)); }, params, opt);
  EXPECT_TRUE(report.passed) << report.summary();
}

TEST(Decoder, StrategyNames) {
  EXPECT_EQ(parse_strategy("many_to_one"), Strategy::kManyToOne);
  EXPECT_EQ(strategy_name(Strategy::kManyToMany), "many_to_many");
  EXPECT_THROW(parse_strategy("one_to_one"), ValidationError);
}
