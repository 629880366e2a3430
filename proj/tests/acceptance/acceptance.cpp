// Acceptance suite: one PASS/FAIL line per criterion, exit code 1 if any fails.
// Usage: millimamba_acceptance [A1 A2 ...]  (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "millimamba/diagnostics.hpp"
#include "millimamba/dsp.hpp"
#include "millimamba/encoder.hpp"
#include "millimamba/fft.hpp"
#include "millimamba/gradcheck.hpp"
#include "millimamba/nn.hpp"
#include "millimamba/objective.hpp"
#include "millimamba/ops.hpp"
#include "millimamba/ssm.hpp"
#include "millimamba/trainer.hpp"

using namespace millimamba;
using tensor::Tensor;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<double> randn(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

Tensor random_param(tensor::Shape shape, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  return Tensor::parameter(shape, randn(tensor::numel(shape), rng, scale));
}

Tensor random_tensor(tensor::Shape shape, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  return Tensor(shape, randn(tensor::numel(shape), rng, scale));
}

Tensor probe(const Tensor& y, std::uint64_t seed = 99) {
  return tensor::sum(tensor::mul(y, random_tensor(y.shape(), seed)));
}

void jitter(tensor::ParamStore& store, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  for (auto t : store.tensors())
    for (auto& v : t.mutable_data()) v += g(rng);
}

// A1: every single-scatterer grid point peaks at its analytic bin.
Outcome a1_dsp_oracle() {
  const auto start = Clock::now();
  const radar::CubeDims dims{};  // 12 x 128 x 256
  dsp::PreprocessOptions opt;    // 8 chirps kept, angle pad 64, rect window
  const double range_bins[] = {0, 7, 64, 129, 255};
  const double doppler_bins[] = {0, 3, 6, 13};  // kept chirps alias to d mod 8
  const std::size_t angle_bins[] = {0, 5, 13, 24, 32, 40, 51, 60};
  std::size_t cases = 0, misses = 0;
  for (double r : range_bins)
    for (double d : doppler_bins)
      for (std::size_t k : angle_bins) {
        const double f = k < opt.angle_pad / 2 ? static_cast<double>(k) / 64.0 : static_cast<double>(k) / 64.0 - 1.0;
        const radar::Scatterer sc[] = {{r, d, f, 1.0, 0.3}};
        const auto hm = dsp::heatmap_3d(dsp::subsample_chirps(radar::synthesize_cube(sc, dims), opt.chirp_target), opt);
        std::size_t best = 0;
        for (std::size_t i = 1; i < hm.values.size(); ++i)
          if (std::abs(hm.values[i]) > std::abs(hm.values[best])) best = i;
        const std::size_t want_d = static_cast<std::size_t>(d) % opt.chirp_target;
        const std::size_t expected = (k * hm.doppler + want_d) * hm.range + static_cast<std::size_t>(r);
        ++cases;
        if (best != expected) ++misses;
      }
  const double t = seconds_since(start);
  return {misses == 0 && t < 30.0, fmt("%zu/%zu grid points missed, %.2f s", misses, cases, t)};
}

std::vector<dsp::Complex> naive_dft(const std::vector<dsp::Complex>& x) {
  const std::size_t n = x.size();
  std::vector<dsp::Complex> y(n);
  for (std::size_t m = 0; m < n; ++m) {
    dsp::Complex acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += x[i] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>((i * m) % n) / static_cast<double>(n));
    y[m] = acc;
  }
  return y;
}

// A2: FFT against the direct DFT plus Parseval.
Outcome a2_fft() {
  const auto start = Clock::now();
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  double worst_dft = 0.0, worst_parseval = 0.0;
  for (std::size_t n : {4, 8, 16, 64, 256})
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<dsp::Complex> x(n);
      for (auto& v : x) v = {g(rng), g(rng)};
      const auto y = dsp::fft_1d(x, n);
      const auto ref = naive_dft(x);
      double diff = 0.0, scale = 0.0, ex = 0.0, ey = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        diff = std::max(diff, std::abs(y[i] - ref[i]));
        scale = std::max(scale, std::abs(ref[i]));
        ex += std::norm(x[i]);
        ey += std::norm(y[i]);
      }
      worst_dft = std::max(worst_dft, diff / scale);
      worst_parseval = std::max(worst_parseval, std::abs(ey / static_cast<double>(n) - ex) / ex);
    }
  const double t = seconds_since(start);
  return {worst_dft < 1e-10 && worst_parseval < 1e-10 && t < 10.0,
          fmt("max rel DFT error %.2e, max Parseval error %.2e, %.2f s", worst_dft, worst_parseval, t)};
}

// A3: constant chirps vanish; a second pass changes nothing.
Outcome a3_clutter() {
  const radar::CubeDims dims{12, 64, 32};
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  radar::RadarCube constant(dims);
  for (std::size_t a = 0; a < dims.antennas; ++a)
    for (std::size_t n = 0; n < dims.samples; ++n) {
      const dsp::Complex v{g(rng) * 10.0, g(rng) * 10.0};
      for (std::size_t c = 0; c < dims.chirps; ++c) constant.at(a, c, n) = v;
    }
  double peak = 0.0;
  for (const auto& v : dsp::remove_clutter(constant).samples) peak = std::max(peak, std::abs(v));

  std::size_t changed = 0, cubes = 0;
  for (std::size_t chirps : {2, 3, 8, 32, 128}) {
    for (int trial = 0; trial < 10; ++trial, ++cubes) {
      radar::RadarCube cube({4, chirps, 16});
      for (auto& v : cube.samples) v = {g(rng), g(rng)};
      const auto once = dsp::remove_clutter(cube);
      const auto twice = dsp::remove_clutter(once);
      if (!std::equal(once.samples.begin(), once.samples.end(), twice.samples.begin())) ++changed;
    }
  }
  return {peak < 1e-10 && changed == 0,
          fmt("constant cube max |.| %.2e; %zu/%zu random cubes changed on a second pass", peak, changed, cubes)};
}

// Per-step recurrence written from the model definition.
std::vector<double> naive_scan(const encoder::ScanInputs& in) {
  const std::size_t d = in.channels, n = in.states;
  std::vector<double> h(d * n, 0.0), y(in.length * d);
  for (std::size_t t = 0; t < in.length; ++t)
    for (std::size_t i = 0; i < d; ++i) {
      const double dt = in.delta[t * d + i], u = in.u[t * d + i];
      double acc = in.skip[i] * u;
      for (std::size_t k = 0; k < n; ++k) {
        double& s = h[i * n + k];
        s = std::exp(dt * in.a[i * n + k]) * s + dt * in.b[t * n + k] * u;
        acc += in.c[t * n + k] * s;
      }
      y[t * d + i] = acc;
    }
  return y;
}

// A4: scan against the naive recurrence, plus the scalar example.
Outcome a4_scan() {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> pos(0.01, 1.0), neg(-2.0, -0.05);
  const std::size_t d = 3, n = 4;
  double worst = 0.0;
  for (std::size_t l : {1, 2, 64, 1000})
    for (int draw = 0; draw < 50; ++draw) {
      auto u = randn(l * d, rng), b = randn(l * n, rng), c = randn(l * n, rng), skip = randn(d, rng);
      std::vector<double> delta(l * d), a(d * n);
      for (auto& v : delta) v = pos(rng);
      for (auto& v : a) v = neg(rng);
      const encoder::ScanInputs in{l, d, n, u, delta, a, b, c, skip};
      const auto y = encoder::ssm_scan(in, encoder::Direction::kForward);
      const auto ref = naive_scan(in);
      double diff = 0.0, scale = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) {
        diff = std::max(diff, std::abs(y[i] - ref[i]));
        scale = std::max(scale, std::abs(ref[i]));
      }
      worst = std::max(worst, diff / scale);
    }
  const std::vector<double> u{1, 1, 1}, delta{1, 1, 1}, a{std::log(0.5)}, b{1, 1, 1}, c{1, 1, 1}, skip{0};
  const auto y = encoder::ssm_scan({3, 1, 1, u, delta, a, b, c, skip}, encoder::Direction::kForward);
  const double scalar_err = std::max({std::abs(y[0] - 1.0), std::abs(y[1] - 1.5), std::abs(y[2] - 1.75)});
  return {worst < 1e-10 && scalar_err < 1e-12,
          fmt("max rel error %.2e over 200 draws; scalar case [%.15g, %.15g, %.15g]", worst, y[0], y[1], y[2])};
}

// A5: finite-difference checks of ops, one Vim layer, one decoder layer and
// the end-to-end loss.
Outcome a5_gradients() {
  using namespace millimamba::tensor;
  const auto start = Clock::now();
  double worst_op = 0.0;
  std::size_t checks = 0, failed = 0;
  auto check = [&](const std::function<Tensor()>& fn, std::vector<Tensor> params, std::size_t samples = 30) {
    GradCheckOptions opt;
    opt.samples = samples;
    opt.tolerance = 1e-4;
    const auto r = grad_check(fn, params, opt);
    worst_op = std::max(worst_op, r.max_rel_error);
    ++checks;
    if (!r.passed) ++failed;
  };
  const auto a = random_param({3, 4}, 30), b = random_param({3, 4}, 31), row = random_param({4}, 32);
  check([&] { return probe(add(a, b)); }, {a, b});
  check([&] { return probe(sub(a, row)); }, {a, row});
  check([&] { return probe(mul(a, row)); }, {a, row});
  check([&] { return probe(scale(a, -1.7)); }, {a});
  check([&] { return probe(add_scalar(a, 0.3)); }, {a});
  check([&] { return probe(exp(a)); }, {a});
  check([&] { return probe(sigmoid(a)); }, {a});
  check([&] { return probe(silu(a)); }, {a});
  check([&] { return probe(softplus(a)); }, {a});
  check([&] { return probe(square(a)); }, {a});
  check([&] { return probe(softmax(a, 0)); }, {a});
  check([&] { return probe(softmax(a, -1)); }, {a});
  const auto gamma = random_param({4}, 33), beta = random_param({4}, 34);
  check([&] { return probe(layer_norm(a, gamma, beta)); }, {a, gamma, beta});
  check([&] { return probe(reshape(a, {2, 6})); }, {a});
  check([&] { return probe(permute(a, {1, 0})); }, {a});
  check([&] { return probe(slice(a, 1, 1, 3)); }, {a});
  check([&] {
    const Tensor parts[] = {a, b};
    return probe(concat(parts, 0));
  }, {a, b});
  const std::size_t idx[] = {2, 0, 2};
  check([&] { return probe(gather(a, idx)); }, {a});
  check([&] { return probe(sum_axis(a, 1)); }, {a});
  check([&] { return mean(square(a)); }, {a});
  const auto m3 = random_param({2, 3, 4}, 40), w = random_param({4, 5}, 41), wb = random_param({2, 5, 4}, 42);
  check([&] { return probe(matmul(m3, w)); }, {m3, w});
  check([&] { return probe(matmul(m3, wb, true)); }, {m3, wb});
  const auto x = random_param({2, 3, 4, 4}, 43), k = random_param({3, 2, 3, 3, 3}, 44), bias = random_param({3}, 45);
  Conv3dOptions copt;
  copt.stride = {1, 2, 2};
  copt.pad = {1, 1, 1};
  check([&] { return probe(conv3d(x, k, bias, copt)); }, {x, k, bias});
  check([&] { return probe(avg_pool3d(x, {1, 2, 2})); }, {x});
  const auto su = random_param({6, 3}, 46), sb = random_param({6, 2}, 48),
             sc = random_param({6, 2}, 49), sd = random_param({3}, 50);
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> pos(0.1, 1.0);
  std::vector<double> dvals(18);
  for (auto& v : dvals) v = pos(rng);
  const auto sdelta = Tensor::parameter({6, 3}, dvals);
  const auto sa_neg = Tensor::parameter({3, 2}, {-0.5, -1.0, -0.2, -1.5, -0.8, -0.3});
  for (auto dir : {encoder::Direction::kForward, encoder::Direction::kBackward})
    check([&] { return probe(encoder::selective_scan(su, sdelta, sa_neg, sb, sc, sd, dir)); },
          {su, sdelta, sa_neg, sb, sc, sd});

  encoder::EncoderConfig ecfg;
  ecfg.channels = 8;
  ecfg.frames = 3;
  ecfg.height = 16;
  ecfg.doppler = 4;
  ecfg.width = 32;
  ecfg.layers = 1;
  ecfg.d_state = 4;
  ecfg.views = 1;
  ParamStore vim_store(7);
  const encoder::VimLayer vim(vim_store, "encoder.vim.0", ecfg);
  jitter(vim_store, 8, 0.1);
  auto tokens = random_param({12, 8}, 11, 0.05);
  auto vim_params = vim_store.tensors();
  vim_params.push_back(tokens);
  GradCheckOptions lopt;
  lopt.samples = 60;
  lopt.abs_floor = 1e-5;
  const auto vim_report = grad_check([&] { return probe(vim(tokens)); }, vim_params, lopt);

  decoder::DecoderConfig dcfg;
  dcfg.layers = 1;
  dcfg.heads = 2;
  dcfg.d_model = 8;
  dcfg.joints = 3;
  dcfg.frames = 3;
  dcfg.memory_dim = 8;
  ParamStore dec_store(30);
  const decoder::DecoderLayer layer(dec_store, "decoder.layer.0", dcfg);
  jitter(dec_store, 31, 0.2);
  auto q = random_param({3, 3, 8}, 32), mem = random_param({6, 8}, 33), keys = random_param({6, 8}, 34);
  auto dec_params = dec_store.tensors();
  dec_params.insert(dec_params.end(), {q, mem, keys});
  const auto dec_report = grad_check([&] { return probe(layer(q, keys, mem)); }, dec_params, lopt);

  GradCheckOptions eopt;
  eopt.samples = 40;
  eopt.tolerance = 1e-3;
  const auto e2e = end_to_end_gradcheck(TinyModelSpec{}, eopt);

  const double t = seconds_since(start);
  const bool pass = failed == 0 && vim_report.passed && dec_report.passed && e2e.passed && t < 300.0;
  return {pass, fmt("ops %zu/%zu pass (max %.1e); vim %.1e; decoder layer %.1e; end-to-end %.1e; %.1f s",
                    checks - failed, checks, worst_op, vim_report.max_rel_error, dec_report.max_rel_error,
                    e2e.max_rel_error, t)};
}

// A6: encode time grows linearly with the token count.
Outcome a6_linear_encode() {
  tensor::NoGradGuard guard;
  std::vector<double> times;
  std::string detail;
  for (std::size_t frames : {4, 8, 16}) {
    encoder::EncoderConfig cfg;
    cfg.channels = 8;
    cfg.frames = frames;
    cfg.height = 128;
    cfg.doppler = 2;
    cfg.width = 128;
    cfg.layers = 2;
    cfg.d_state = 16;
    cfg.views = 1;
    tensor::ParamStore store(6);
    const encoder::Encoder enc(store, cfg, {0});
    const Tensor input[] = {random_tensor({2, frames, cfg.height, cfg.doppler, cfg.width}, 60 + frames)};
    enc.encode(input);  // warm-up
    std::vector<double> runs;
    for (int r = 0; r < 5; ++r) {
      const auto start = Clock::now();
      enc.encode(input);
      runs.push_back(seconds_since(start));
    }
    std::nth_element(runs.begin(), runs.begin() + 2, runs.end());
    times.push_back(runs[2]);
    detail += fmt("N=%zu %.3f s; ", cfg.tokens(), runs[2]);
  }
  const double r1 = times[1] / times[0], r2 = times[2] / times[1];
  return {r1 < 2.5 && r2 < 2.5, detail + fmt("ratios %.2f, %.2f (quadratic reference ~4)", r1, r2)};
}

ModelConfig desk_config() {
  ModelConfig cfg;
  cfg.frames = 3;
  cfg.views = {1};
  cfg.channels = 8;
  cfg.encoder_layers = 1;
  cfg.d_state = 4;
  cfg.decoder_layers = 1;
  cfg.d_model = 32;
  cfg.heads = 4;
  cfg.joints = 14;
  return cfg;
}

struct ToyRun {
  double initial = 0.0, final = 0.0, test_oks = 0.0, test_ap = 0.0, seconds = 0.0;
  bool aborted = false;
};

// A7: 200 training windows, 2000 steps, test scene from the next seed.
Outcome a7_learnability() {
  const auto start = Clock::now();
  auto cfg = desk_config();
  cfg.steps = 2000;
  const auto train_data = simulate_sequence(cfg, 200 + cfg.frames - 1, cfg.seed);
  const auto test_data = simulate_sequence(cfg, 60, cfg.seed + 1);
  std::vector<ToyRun> runs;
  for (auto strategy : {decoder::Strategy::kManyToMany, decoder::Strategy::kManyToOne}) {
    cfg.strategy = strategy;
    const auto t0 = Clock::now();
    Model model(cfg);
    ToyRun run;
    run.initial = dataset_loss(model, train_data);
    const auto result = train(model, train_data);
    run.aborted = result.aborted;
    run.final = dataset_loss(model, train_data);
    const auto report = evaluate(model, test_data);
    run.test_oks = report.mean_oks;
    run.test_ap = report.ap;
    run.seconds = seconds_since(t0);
    runs.push_back(run);
  }
  const auto& mm = runs[0];
  const auto& mo = runs[1];
  const double t = seconds_since(start);
  const bool pass = !mm.aborted && !mo.aborted && mm.final < 0.5 * mm.initial && mo.final < 0.5 * mo.initial &&
                    mm.test_oks >= 0.5 && mo.test_oks >= 0.5 && mm.test_oks >= mo.test_oks - 0.05 && t < 1800.0;
  return {pass, fmt("many_to_many loss %.4f -> %.4f, test OKS %.3f, AP %.1f; many_to_one loss %.4f -> %.4f, "
                    "test OKS %.3f, AP %.1f; %.0f s",
                    mm.initial, mm.final, mm.test_oks, 100.0 * mm.test_ap, mo.initial, mo.final, mo.test_oks,
                    100.0 * mo.test_ap, t)};
}

// A8: hand-enumerated AP cases and velocity-loss examples.
Outcome a8_metrics() {
  using namespace millimamba::objective;
  OksParams unit;
  unit.k = {1.0};
  unit.scale_mode = ScaleMode::kFixed;
  unit.fixed_scale = 1.0;
  auto at_oks = [](std::vector<double> targets) {
    PoseWindow p(targets.size(), 1);
    for (std::size_t f = 0; f < targets.size(); ++f) p.x(f, 0) = std::sqrt(-2.0 * std::log(targets[f]));
    return p;
  };
  const auto two = evaluate_ap(at_oks({0.60, 0.90}), PoseWindow(2, 1), unit);
  const auto low = evaluate_ap(at_oks({0.49}), PoseWindow(1, 1), unit);
  PoseWindow gt(3, 14);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.1, 0.9);
  for (auto& c : gt.coords) c = u(rng);
  const auto perfect = evaluate_ap(gt, gt, OksParams::defaults());
  bool ok = std::abs(two.ap - 0.60) < 1e-12 && two.ap50 == 1.0 && two.ap75 == 0.5;
  ok = ok && perfect.ap == 1.0 && perfect.ap50 == 1.0 && perfect.ap75 == 1.0;
  ok = ok && low.ap == 0.0 && low.ap50 == 0.0 && low.ap75 == 0.0;

  PoseWindow g(2, 1), p(2, 1);
  p.x(1, 0) = 0.3;
  p.y(1, 0) = 0.4;
  const double vel = loss_vel(p, g);
  ok = ok && std::abs(vel - 0.25) < 1e-12 && loss_vel(g, g) == 0.0;

  const auto json = nlohmann::json::parse(two.to_json());
  ok = ok && std::abs(json.at("AP").get<double>() - 60.0) < 1e-9 && json.at("AP50").get<double>() == 100.0;
  return {ok, fmt("{0.60, 0.90}: AP %.4f AP50 %.2f AP75 %.2f; perfect AP %.2f; 0.49: AP %.2f; loss_vel %.15g; "
                  "JSON reports x100",
                  two.ap, two.ap50, two.ap75, perfect.ap, low.ap, vel)};
}

// A9: 4D preprocessing costs at least twice the 3D path in time and memory.
Outcome a9_bench() {
  const auto r = dsp::bench_heatmaps(20, 5);
  const bool pass = r.latency_ratio() >= 2.0 && r.memory_ratio() >= 2.0;
  return {pass, fmt("latency 4D/3D %.2fx (reference %.1fx), peak memory 4D/3D %.2fx (reference %.1fx); "
                    "absolute ratios depend on hardware and on the 4D antenna grouping",
                    r.latency_ratio(), dsp::BenchReport::kReferenceLatencyRatio, r.memory_ratio(),
                    dsp::BenchReport::kReferenceMemoryRatio)};
}

// simulate -> cube stream -> preprocess -> train(200) -> eval, as the CLI chains it.
std::string chain_metrics(std::uint64_t seed) {
  auto cfg = desk_config();
  cfg.seed = seed;
  cfg.scene_frames = 24;
  auto simulate = [&](std::uint64_t scene_seed) {
    auto spec = cfg.scene_spec();
    LabeledSequence seq;
    seq.script = radar::make_scene(spec, scene_seed);
    std::stringstream stream;
    radar::for_each_frame(seq.script, spec, scene_seed, cfg.dataset_options(),
                          [&](std::size_t, radar::FrameCubes&& fc) {
                            radar::write_cube(stream, fc.horizontal);
                            radar::write_cube(stream, fc.vertical);
                          });
    const auto cubes = radar::read_cube_stream(stream);
    seq.features = FeatureSequence::from_cube_stream(cubes, cfg);
    return seq;
  };
  const auto train_data = simulate(seed);
  const auto test_data = simulate(seed + 1);
  Model model(cfg);
  TrainOptions opt;
  opt.steps = 200;
  const auto result = train(model, train_data, opt);
  nlohmann::json j = nlohmann::json::parse(evaluate(model, test_data).to_json());
  j["final_train_loss"] = result.records.empty() ? 0.0 : result.records.back().total;
  j["aborted"] = result.aborted;
  return j.dump();
}

// A10: two seed-0 chain runs give bit-identical metrics JSON.
Outcome a10_determinism() {
  const auto first = chain_metrics(0);
  const auto second = chain_metrics(0);
  return {first == second && first.find("\"aborted\":false") != std::string::npos,
          fmt("%s (%zu bytes, %s)", first == second ? "identical" : "different", first.size(),
              first.substr(0, std::min<std::size_t>(first.size(), 120)).c_str())};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"A1", a1_dsp_oracle},   {"A2", a2_fft},       {"A3", a3_clutter},       {"A4", a4_scan},
      {"A5", a5_gradients},    {"A6", a6_linear_encode}, {"A7", a7_learnability}, {"A8", a8_metrics},
      {"A9", a9_bench},        {"A10", a10_determinism},
  };
  std::set<std::string> selected(argv + 1, argv + argc);
  for (const auto& name : selected)
    if (std::none_of(criteria.begin(), criteria.end(), [&](const auto& c) { return c.first == name; })) {
      std::fprintf(stderr, "unknown criterion %s\n", name.c_str());
      return 2;
    }
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    if (!selected.empty() && !selected.contains(name)) continue;
    Outcome out;
    try {
      out = run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%-4s %s  %s\n", name.c_str(), out.pass ? "PASS" : "FAIL", out.detail.c_str());
    std::fflush(stdout);
    if (!out.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
