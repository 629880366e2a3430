#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "millimamba/radar_sim.hpp"

namespace millimamba::dsp {

using radar::Complex;
using radar::ComplexBuffer;
using radar::RadarCube;
using radar::View;

enum class Window { kRect, kHann };

Window parse_window(const std::string& name);
const char* window_name(Window w);

struct PreprocessOptions {
  std::size_t chirp_target = 8;
  std::size_t angle_pad = 64;
  Window window = Window::kRect;
  // 4D path: the first `azimuth_antennas` virtual antennas form the azimuth
  // row, the rest sit centred on an elevated row.
  std::size_t azimuth_antennas = 8;
  std::size_t elevation_pad = 8;
};

// Angle x doppler x range, no fftshift: bin 0 is DC on every axis.
struct Heatmap3D {
  std::size_t angle = 0, doppler = 0, range = 0;
  ComplexBuffer values;
  std::uint64_t frame_index = 0;
  View view = View::kHorizontal;

  Complex& at(std::size_t h, std::size_t d, std::size_t w) { return values[(h * doppler + d) * range + w]; }
  const Complex& at(std::size_t h, std::size_t d, std::size_t w) const {
    return values[(h * doppler + d) * range + w];
  }
};

// Azimuth x elevation x doppler x range.
struct Heatmap4D {
  std::size_t azimuth = 0, elevation = 0, doppler = 0, range = 0;
  ComplexBuffer values;
  std::uint64_t frame_index = 0;
  View view = View::kHorizontal;

  Complex& at(std::size_t az, std::size_t el, std::size_t d, std::size_t w) {
    return values[((az * elevation + el) * doppler + d) * range + w];
  }
  const Complex& at(std::size_t az, std::size_t el, std::size_t d, std::size_t w) const {
    return values[((az * elevation + el) * doppler + d) * range + w];
  }
};

// out[a][c][n] = in[a][c][n] - mean over chirps of in[a][:][n].
RadarCube remove_clutter(const RadarCube& cube);

// Keeps chirps {0, s, 2s, ...}, s = C / target.
RadarCube subsample_chirps(const RadarCube& cube, std::size_t target = 8);

// Range FFT over samples, doppler FFT over chirps, angle FFT over antennas
// zero-padded to options.angle_pad. Expects a clutter-removed, subsampled cube.
Heatmap3D heatmap_3d(const RadarCube& cube, const PreprocessOptions& options = {});

// Baseline: same range/doppler passes, then antennas regrouped on a 2D
// aperture and transformed separately in azimuth and elevation.
Heatmap4D heatmap_4d(const RadarCube& cube, const PreprocessOptions& options = {});

// remove_clutter -> subsample_chirps -> heatmap_3d.
Heatmap3D preprocess(const RadarCube& raw, const PreprocessOptions& options = {});
Heatmap4D preprocess_4d(const RadarCube& raw, const PreprocessOptions& options = {});

// Processes frames on `workers` threads; output order and bits do not depend
// on the worker count.
std::vector<Heatmap3D> preprocess_batch(std::span<const RadarCube> cubes,
                                        const PreprocessOptions& options, std::size_t workers);

// MMH3 / MMH4 (little-endian): magic, u32 version=1, u32 dims..., u32 view,
// u64 frame_index, then interleaved (re, im) f32 in C order.
void write_heatmap(std::ostream& os, const Heatmap3D& hm);
void write_heatmap(std::ostream& os, const Heatmap4D& hm);
bool read_heatmap(std::istream& is, Heatmap3D& hm);
bool read_heatmap(std::istream& is, Heatmap4D& hm);

struct BenchReport {
  std::size_t frames = 0;
  std::size_t runs = 0;
  std::size_t peak_bytes_3d = 0;
  std::size_t peak_bytes_4d = 0;
  double latency_3d = 0.0;  // seconds per frame, median over runs
  double latency_4d = 0.0;

  double memory_ratio() const { return static_cast<double>(peak_bytes_4d) / static_cast<double>(peak_bytes_3d); }
  double latency_ratio() const { return latency_4d / latency_3d; }

  static constexpr double kReferenceMemoryRatio = 11.0;
  static constexpr double kReferenceLatencyRatio = 8.6;

  std::string to_json() const;
};

// Times heatmap_3d against heatmap_4d on synthetic clutter-removed,
// subsampled frames. runs >= 5.
BenchReport bench_heatmaps(std::size_t frames, std::size_t runs, const PreprocessOptions& options = {},
                           radar::CubeDims dims = {});

}  // namespace millimamba::dsp
