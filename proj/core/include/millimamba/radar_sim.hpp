#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "millimamba/pose.hpp"
#include "millimamba/tracking_allocator.hpp"

namespace millimamba::radar {

using Complex = std::complex<double>;
using ComplexBuffer = std::vector<Complex, dsp::TrackingAllocator<Complex>>;

enum class View : std::uint32_t { kHorizontal = 0, kVertical = 1 };

const char* view_name(View v);

struct CubeDims {
  std::size_t antennas = 12;
  std::size_t chirps = 128;
  std::size_t samples = 256;

  std::size_t size() const { return antennas * chirps * samples; }
  bool operator==(const CubeDims&) const = default;
};

// A point reflector in bin units. range_bin in [0, samples), doppler_bin in
// [0, chirps) expressed before chirp subsampling, angle_freq in [-0.5, 0.5)
// cycles per virtual antenna.
struct Scatterer {
  double range_bin = 0.0;
  double doppler_bin = 0.0;
  double angle_freq = 0.0;
  double amplitude = 1.0;
  double phase = 0.0;
};

// Raw FMCW frame, C-order [antenna][chirp][sample].
struct RadarCube {
  CubeDims dims;
  ComplexBuffer samples;
  std::uint64_t frame_index = 0;
  View view = View::kHorizontal;

  RadarCube() = default;
  explicit RadarCube(CubeDims d, std::uint64_t frame = 0, View v = View::kHorizontal)
      : dims(d), samples(d.size()), frame_index(frame), view(v) {}

  Complex& at(std::size_t a, std::size_t c, std::size_t n) {
    return samples[(a * dims.chirps + c) * dims.samples + n];
  }
  const Complex& at(std::size_t a, std::size_t c, std::size_t n) const {
    return samples[(a * dims.chirps + c) * dims.samples + n];
  }
};

// samples[a][c][n] = sum_k amp_k * exp(j(phase_k + 2pi(r_k n/N + d_k c/C + f_k a))).
RadarCube synthesize_cube(std::span<const Scatterer> scatterers, CubeDims dims = {},
                          std::uint64_t frame_index = 0, View view = View::kHorizontal);

// Adds circular complex Gaussian noise with per-component standard deviation
// `stddev`; the stream depends only on (seed, frame_index, view).
void add_noise(RadarCube& cube, double stddev, std::uint64_t seed);

// Placeholder physical constants (the bin-unit API is what the tests use).
struct PhysicalRadar {
  double chirp_slope_hz_per_s = 60.0e12;
  double sample_rate_hz = 5.0e6;
  double carrier_hz = 77.0e9;
  double chirp_period_s = 100.0e-6;
  double element_spacing_wavelengths = 0.5;
};

Scatterer scatterer_from_physical(double range_m, double radial_velocity_mps, double sin_angle,
                                  double amplitude, double phase, CubeDims dims,
                                  const PhysicalRadar& radar = {});

// One joint sample at one frame: pixel coordinates plus depth (m) and radial
// velocity (m/s).
struct JointState {
  double image_x = 0.0;
  double image_y = 0.0;
  double depth = 0.0;
  double radial_velocity = 0.0;
};

struct SceneScript {
  std::size_t frame_count = 0;
  std::size_t joint_count = 0;
  double image_width = 256.0;
  double image_height = 256.0;
  std::vector<std::vector<JointState>> joints;  // [joint][frame]

  void validate() const;
  PoseWindow poses(std::size_t first_frame, std::size_t count) const;
};

// Affine joint -> scatterer mapping. Horizontal radars observe image_x as
// angle, vertical radars observe image_y; both observe depth as range and
// radial velocity as doppler.
struct SensorMapping {
  double max_angle_freq = 0.4;
  double reference_depth = 3.0;
  double reference_range_bin = 16.0;
  double range_bins_per_meter = 8.0;
  double doppler_bins_per_mps = 4.0;
  double amplitude = 1.0;
};

std::vector<Scatterer> pose_to_scatterers(const SceneScript& script, std::size_t frame, View view,
                                          const SensorMapping& mapping, CubeDims dims);

// Parameters of the synthetic scene: a skeleton template drifting and swinging
// along sinusoids. The seed randomizes phases and amplitudes.
struct SceneSpec {
  std::size_t frame_count = 64;
  std::size_t joint_count = kDefaultJoints;
  double image_width = 256.0;
  double image_height = 256.0;
  double body_height = 0.6;        // fraction of image height
  double drift_amplitude = 0.04;   // fraction of image size
  double limb_amplitude = 0.06;    // fraction of body height
  double depth_amplitude = 0.5;    // metres
  double base_depth = 3.0;         // metres
  double joint_depth_spread = 0.15;
  double frame_rate = 10.0;        // frames per second
  double noise_stddev = 0.0;
};

SceneScript make_scene(const SceneSpec& spec, std::uint64_t seed);

struct FrameCubes {
  RadarCube horizontal;
  RadarCube vertical;

  const RadarCube& get(View v) const { return v == View::kHorizontal ? horizontal : vertical; }
};

// Sliding windows over a synthesized sequence; frames are stored once and
// windows index into them.
struct Dataset {
  SceneScript script;
  std::size_t window_frames = 0;
  std::vector<FrameCubes> frames;

  std::size_t window_count() const {
    return frames.size() < window_frames ? 0 : frames.size() - window_frames + 1;
  }
  std::span<const FrameCubes> window_cubes(std::size_t w) const {
    return std::span<const FrameCubes>(frames).subspan(w, window_frames);
  }
  PoseWindow window_pose(std::size_t w) const { return script.poses(w, window_frames); }

  void write(std::ostream& os) const;  // concatenated MMRC frames, h then v
};

struct DatasetOptions {
  CubeDims dims{12, 32, 32};
  SensorMapping mapping{};
};

// window_frames must be odd so each window has a center frame.
Dataset generate_dataset(const SceneSpec& spec, std::size_t window_frames, std::uint64_t seed,
                         const DatasetOptions& options = {});

// Calls `sink(frame, cubes)` for every frame in order without retaining them.
void for_each_frame(const SceneScript& script, const SceneSpec& spec, std::uint64_t seed,
                    const DatasetOptions& options,
                    const std::function<void(std::size_t, FrameCubes&&)>& sink);

// MMRC cube format (little-endian): "MMRC", u32 version=1, u32 A, C, N,
// u32 view, u64 frame_index, then A*C*N interleaved (re, im) f32 pairs.
inline constexpr std::uint32_t kCubeFormatVersion = 1;
void write_cube(std::ostream& os, const RadarCube& cube);
// Returns false on clean end of stream.
bool read_cube(std::istream& is, RadarCube& cube);
std::vector<RadarCube> read_cube_stream(std::istream& is);

}  // namespace millimamba::radar
