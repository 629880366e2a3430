#include "millimamba/dsp.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

#include "millimamba/error.hpp"
#include "millimamba/fft.hpp"

namespace millimamba::dsp {
namespace {

std::vector<double> window_taps(Window w, std::size_t n) {
  std::vector<double> taps(n, 1.0);
  if (w == Window::kHann) {
    for (std::size_t i = 0; i < n; ++i) {
      taps[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n)));
    }
  }
  return taps;
}

// Transforms `count` interleaved sequences of length plan.size(), element i
// of sequence s at base + s*seq_stride + i*elem_stride.
void strided_fft(Complex* base, const FftPlan& plan, std::size_t count, std::size_t seq_stride,
                 std::size_t elem_stride, std::vector<Complex>& scratch) {
  const std::size_t n = plan.size();
  scratch.resize(n);
  for (std::size_t s = 0; s < count; ++s) {
    Complex* p = base + s * seq_stride;
    for (std::size_t i = 0; i < n; ++i) scratch[i] = p[i * elem_stride];
    plan.forward(scratch);
    for (std::size_t i = 0; i < n; ++i) p[i * elem_stride] = scratch[i];
  }
}

void check_cube(const RadarCube& cube, const PreprocessOptions& options) {
  require(cube.samples.size() == cube.dims.size() && cube.dims.size() > 0,
          "heatmap: cube sample count does not match dims");
  require(cube.dims.chirps == options.chirp_target,
          "heatmap: cube must be subsampled to chirp_target chirps");
  require(cube.dims.antennas <= options.angle_pad, "heatmap: angle_pad smaller than antenna count");
}

// Range pass over samples and doppler pass over chirps into an
// [antenna][chirp][sample] buffer laid out with `antenna_stride`.
void range_doppler(const RadarCube& cube, const PreprocessOptions& options, Complex* out,
                   std::size_t antenna_stride, std::vector<Complex>& scratch) {
  const auto& d = cube.dims;
  const auto range_w = window_taps(options.window, d.samples);
  const auto doppler_w = window_taps(options.window, d.chirps);
  const FftPlan range_plan(d.samples);
  const FftPlan doppler_plan(d.chirps);
  for (std::size_t a = 0; a < d.antennas; ++a) {
    Complex* slab = out + a * antenna_stride;
    for (std::size_t c = 0; c < d.chirps; ++c) {
      const Complex* src = &cube.at(a, c, 0);
      Complex* dst = slab + c * d.samples;
      for (std::size_t n = 0; n < d.samples; ++n) dst[n] = src[n] * (range_w[n] * doppler_w[c]);
      range_plan.forward(std::span<Complex>(dst, d.samples));
    }
    strided_fft(slab, doppler_plan, d.samples, 1, d.samples, scratch);
  }
}

}  // namespace

Window parse_window(const std::string& name) {
  if (name == "rect") return Window::kRect;
  if (name == "hann") return Window::kHann;
  fail("unknown window '" + name + "' (expected rect|hann)");
}

const char* window_name(Window w) { return w == Window::kRect ? "rect" : "hann"; }

RadarCube remove_clutter(const RadarCube& cube) {
  RadarCube out = cube;
  const auto& d = cube.dims;
  const double chirps = static_cast<double>(d.chirps);
  std::vector<double> fiber(d.chirps);
  for (std::size_t a = 0; a < d.antennas; ++a) {
    for (std::size_t n = 0; n < d.samples; ++n) {
      for (int part = 0; part < 2; ++part) {
        for (std::size_t c = 0; c < d.chirps; ++c) {
          const Complex v = cube.at(a, c, n);
          fiber[c] = part == 0 ? v.real() : v.imag();
        }
        // Mean as an unevaluated sum hi + lo, accurate far below one ulp.
        double hi = 0.0, lo = 0.0, abs_sum = 0.0;
        for (double x : fiber) {
          const double s = hi + x;
          const double bb = s - hi;
          lo += (hi - (s - bb)) + (x - bb);
          hi = s;
          abs_sum += std::abs(x);
        }
        const double mean_hi = hi / chirps;
        const double mean_lo = (std::fma(-mean_hi, chirps, hi) + lo) / chirps;
        // A mean at rounding-noise level means the fiber is already
        // clutter-free; leaving it untouched makes the operation idempotent.
        if (std::abs(mean_hi) <= 4.0 * std::numeric_limits<double>::epsilon() * abs_sum / chirps) continue;
        for (std::size_t c = 0; c < d.chirps; ++c) {
          const double v = (fiber[c] - mean_hi) - mean_lo;
          Complex& o = out.at(a, c, n);
          o = part == 0 ? Complex(v, o.imag()) : Complex(o.real(), v);
        }
      }
    }
  }
  return out;
}

RadarCube subsample_chirps(const RadarCube& cube, std::size_t target) {
  require(target > 0 && cube.dims.chirps % target == 0,
          "subsample_chirps: chirp count " + std::to_string(cube.dims.chirps) +
              " is not divisible by target " + std::to_string(target));
  const std::size_t stride = cube.dims.chirps / target;
  radar::CubeDims dims = cube.dims;
  dims.chirps = target;
  RadarCube out(dims, cube.frame_index, cube.view);
  for (std::size_t a = 0; a < dims.antennas; ++a) {
    for (std::size_t c = 0; c < target; ++c) {
      const Complex* src = &cube.at(a, c * stride, 0);
      std::copy(src, src + dims.samples, &out.at(a, c, 0));
    }
  }
  return out;
}

Heatmap3D heatmap_3d(const RadarCube& cube, const PreprocessOptions& options) {
  check_cube(cube, options);
  const auto& d = cube.dims;
  Heatmap3D hm;
  hm.angle = options.angle_pad;
  hm.doppler = d.chirps;
  hm.range = d.samples;
  hm.frame_index = cube.frame_index;
  hm.view = cube.view;
  hm.values.assign(hm.angle * hm.doppler * hm.range, Complex{});

  std::vector<Complex> scratch;
  range_doppler(cube, options, hm.values.data(), d.chirps * d.samples, scratch);
  const FftPlan angle_plan(hm.angle);
  strided_fft(hm.values.data(), angle_plan, hm.doppler * hm.range, 1, hm.doppler * hm.range, scratch);
  return hm;
}

Heatmap4D heatmap_4d(const RadarCube& cube, const PreprocessOptions& options) {
  check_cube(cube, options);
  const auto& d = cube.dims;
  require(options.azimuth_antennas > 0 && options.azimuth_antennas <= d.antennas,
          "heatmap_4d: azimuth_antennas out of range");
  const std::size_t elevated = d.antennas - options.azimuth_antennas;
  require(elevated <= options.azimuth_antennas, "heatmap_4d: more elevated than azimuth antennas");
  require(options.azimuth_antennas <= options.angle_pad && options.elevation_pad >= 2,
          "heatmap_4d: pad sizes too small for the antenna grid");

  const std::size_t slab = d.chirps * d.samples;
  ComplexBuffer range_doppler_cube(d.antennas * slab);
  std::vector<Complex> scratch;
  range_doppler(cube, options, range_doppler_cube.data(), slab, scratch);

  Heatmap4D hm;
  hm.azimuth = options.angle_pad;
  hm.elevation = options.elevation_pad;
  hm.doppler = d.chirps;
  hm.range = d.samples;
  hm.frame_index = cube.frame_index;
  hm.view = cube.view;
  hm.values.assign(hm.azimuth * hm.elevation * slab, Complex{});

  // Row 0: azimuth antennas at columns 0..az-1. Row 1: elevated antennas
  // centred over the azimuth row.
  const std::size_t offset = (options.azimuth_antennas - elevated) / 2;
  for (std::size_t a = 0; a < d.antennas; ++a) {
    const bool upper = a >= options.azimuth_antennas;
    const std::size_t col = upper ? offset + (a - options.azimuth_antennas) : a;
    const std::size_t row = upper ? 1 : 0;
    const Complex* src = range_doppler_cube.data() + a * slab;
    std::copy(src, src + slab, &hm.at(col, row, 0, 0));
  }
  range_doppler_cube = ComplexBuffer();

  const FftPlan az_plan(hm.azimuth);
  const std::size_t rows = elevated > 0 ? 2 : 1;
  for (std::size_t row = 0; row < rows; ++row) {
    strided_fft(&hm.at(0, row, 0, 0), az_plan, slab, 1, hm.elevation * slab, scratch);
  }
  const FftPlan el_plan(hm.elevation);
  for (std::size_t az = 0; az < hm.azimuth; ++az) {
    strided_fft(&hm.at(az, 0, 0, 0), el_plan, slab, 1, slab, scratch);
  }
  return hm;
}

Heatmap3D preprocess(const RadarCube& raw, const PreprocessOptions& options) {
  return heatmap_3d(subsample_chirps(remove_clutter(raw), options.chirp_target), options);
}

Heatmap4D preprocess_4d(const RadarCube& raw, const PreprocessOptions& options) {
  return heatmap_4d(subsample_chirps(remove_clutter(raw), options.chirp_target), options);
}

std::vector<Heatmap3D> preprocess_batch(std::span<const RadarCube> cubes,
                                        const PreprocessOptions& options, std::size_t workers) {
  std::vector<Heatmap3D> out(cubes.size());
  workers = std::max<std::size_t>(1, std::min(workers, cubes.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < cubes.size(); ++i) out[i] = preprocess(cubes[i], options);
    return out;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < cubes.size(); i += workers) out[i] = preprocess(cubes[i], options);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace millimamba::dsp
