#include <benchmark/benchmark.h>

#include <random>

#include "millimamba/dsp.hpp"
#include "millimamba/encoder.hpp"
#include "millimamba/fft.hpp"

using namespace millimamba;

namespace {

radar::RadarCube prepared_cube() {
  std::vector<radar::Scatterer> sc;
  for (int k = 0; k < 14; ++k) sc.push_back({10.0 + 7.0 * k, 1.0 + (k % 7), -0.4 + 0.05 * k, 1.0, 0.3 * k});
  const auto raw = radar::synthesize_cube(sc, radar::CubeDims{}, 0, radar::View::kHorizontal);
  return dsp::subsample_chirps(dsp::remove_clutter(raw), 8);
}

void BM_Fft(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(0);
  std::normal_distribution<double> d;
  std::vector<radar::Complex> x(n);
  for (auto& v : x) v = {d(rng), d(rng)};
  for (auto _ : state) benchmark::DoNotOptimize(dsp::fft_1d(x, n));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Fft)->RangeMultiplier(4)->Range(16, 4096)->Complexity(benchmark::oNLogN);

void BM_Heatmap3D(benchmark::State& state) {
  const auto cube = prepared_cube();
  for (auto _ : state) benchmark::DoNotOptimize(dsp::heatmap_3d(cube));
}
BENCHMARK(BM_Heatmap3D)->Unit(benchmark::kMillisecond);

void BM_Heatmap4D(benchmark::State& state) {
  const auto cube = prepared_cube();
  for (auto _ : state) benchmark::DoNotOptimize(dsp::heatmap_4d(cube));
}
BENCHMARK(BM_Heatmap4D)->Unit(benchmark::kMillisecond);

void BM_SsmScan(benchmark::State& state) {
  const auto L = static_cast<std::size_t>(state.range(0));
  const std::size_t d = 16, n = 4;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> pos(0.01, 0.5);
  std::vector<double> u(L * d), delta(L * d), a(d * n), b(L * n), c(L * n), skip(d, 1.0);
  for (auto& v : u) v = g(rng);
  for (auto& v : delta) v = pos(rng);
  for (auto& v : a) v = -pos(rng);
  for (auto& v : b) v = g(rng);
  for (auto& v : c) v = g(rng);
  encoder::ScanInputs in{L, d, n, u, delta, a, b, c, skip};
  for (auto _ : state) benchmark::DoNotOptimize(encoder::ssm_scan(in, encoder::Direction::kForward));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SsmScan)->RangeMultiplier(4)->Range(256, 65536)->Complexity(benchmark::oN);

void BM_Encode(benchmark::State& state) {
  encoder::EncoderConfig cfg;
  cfg.channels = 8;
  cfg.frames = 1;
  cfg.height = 16;
  cfg.doppler = 2;
  cfg.width = static_cast<std::size_t>(state.range(0));
  cfg.layers = 1;
  cfg.d_state = 4;
  cfg.views = 1;
  tensor::ParamStore store(0);
  encoder::Encoder enc(store, cfg, {1});
  tensor::Tensor x = tensor::Tensor::full({2, cfg.frames, cfg.height, cfg.doppler, cfg.width}, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(enc.encode(std::span(&x, 1)));
  state.SetComplexityN(static_cast<benchmark::IterationCount>(cfg.tokens()));
}
BENCHMARK(BM_Encode)->RangeMultiplier(2)->Range(256, 2048)->Unit(benchmark::kMillisecond)->Complexity(benchmark::oN);

}  // namespace

BENCHMARK_MAIN();
