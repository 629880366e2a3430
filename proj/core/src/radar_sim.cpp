#include "millimamba/radar_sim.hpp"

#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <string>

#include "millimamba/binary_io.hpp"
#include "millimamba/error.hpp"

namespace millimamba {

PoseWindow PoseWindow::frame(std::size_t f) const {
  require(f < frames, "PoseWindow::frame: index out of range");
  PoseWindow out(1, joints);
  for (std::size_t j = 0; j < joints; ++j) {
    out.x(0, j) = x(f, j);
    out.y(0, j) = y(f, j);
    out.visible[j] = visible[f * joints + j];
  }
  if (!frame_ids.empty()) out.frame_ids = {frame_ids[f]};
  return out;
}

}  // namespace millimamba

namespace millimamba::radar {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Skeleton template in body-height units, y pointing down, origin at the pelvis.
constexpr double kTemplate[kDefaultJoints][2] = {
    {0.00, -0.45}, {0.00, -0.33}, {-0.10, -0.30}, {-0.15, -0.12}, {-0.17, 0.03},
    {0.10, -0.30},  {0.15, -0.12}, {0.17, 0.03},   {-0.07, 0.05}, {-0.08, 0.27},
    {-0.08, 0.48}, {0.07, 0.05},   {0.08, 0.27},   {0.08, 0.48},
};
// Horizontal swing weight per joint (arms and legs), sign gives left/right antiphase.
constexpr double kSwing[kDefaultJoints] = {0.0, 0.0, 0.0,  0.5, 1.0, 0.0,  -0.5,
                                           -1.0, 0.0, -0.5, -1.0, 0.0, 0.5, 1.0};
// Fixed depth offset per joint, in units of joint_depth_spread.
constexpr double kDepthOffset[kDefaultJoints] = {0.2, 0.1,  0.0, -0.5, -1.0, 0.0, -0.5,
                                                 -1.0, 0.3, 0.0, 0.4, 0.3, 0.0, 0.4};

void check_finite(const Scatterer& s) {
  require(std::isfinite(s.range_bin) && std::isfinite(s.doppler_bin) &&
              std::isfinite(s.angle_freq) && std::isfinite(s.amplitude) && std::isfinite(s.phase),
          "synthesize_cube: non-finite scatterer parameter");
  require(s.amplitude > 0.0, "synthesize_cube: scatterer amplitude must be positive");
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

const char* view_name(View v) { return v == View::kHorizontal ? "horizontal" : "vertical"; }

RadarCube synthesize_cube(std::span<const Scatterer> scatterers, CubeDims dims,
                          std::uint64_t frame_index, View view) {
  require(dims.antennas > 0 && dims.chirps > 0 && dims.samples > 0,
          "synthesize_cube: dimensions must be positive");
  RadarCube cube(dims, frame_index, view);
  std::vector<Complex> along_a(dims.antennas), along_c(dims.chirps), along_n(dims.samples);
  for (const auto& s : scatterers) {
    check_finite(s);
    require(s.range_bin >= 0.0 && s.range_bin < static_cast<double>(dims.samples) && s.doppler_bin >= 0.0 &&
                s.doppler_bin < static_cast<double>(dims.chirps) && s.angle_freq >= -0.5 && s.angle_freq < 0.5,
            "synthesize_cube: scatterer outside the bin ranges");
    for (std::size_t a = 0; a < dims.antennas; ++a) {
      along_a[a] = s.amplitude * std::polar(1.0, s.phase + kTwoPi * s.angle_freq * static_cast<double>(a));
    }
    for (std::size_t c = 0; c < dims.chirps; ++c) {
      along_c[c] = std::polar(1.0, kTwoPi * s.doppler_bin * static_cast<double>(c) /
                                       static_cast<double>(dims.chirps));
    }
    for (std::size_t n = 0; n < dims.samples; ++n) {
      along_n[n] = std::polar(1.0, kTwoPi * s.range_bin * static_cast<double>(n) /
                                       static_cast<double>(dims.samples));
    }
    for (std::size_t a = 0; a < dims.antennas; ++a) {
      for (std::size_t c = 0; c < dims.chirps; ++c) {
        const Complex ac = along_a[a] * along_c[c];
        Complex* row = &cube.at(a, c, 0);
        for (std::size_t n = 0; n < dims.samples; ++n) row[n] += ac * along_n[n];
      }
    }
  }
  return cube;
}

void add_noise(RadarCube& cube, double stddev, std::uint64_t seed) {
  if (stddev <= 0.0) return;
  std::mt19937_64 rng(mix(seed ^ mix(cube.frame_index * 2 + static_cast<std::uint64_t>(cube.view))));
  std::normal_distribution<double> normal(0.0, stddev);
  for (auto& v : cube.samples) v += Complex(normal(rng), normal(rng));
}

Scatterer scatterer_from_physical(double range_m, double radial_velocity_mps, double sin_angle,
                                  double amplitude, double phase, CubeDims dims,
                                  const PhysicalRadar& radar) {
  constexpr double kLightSpeed = 299792458.0;
  const double beat_hz = 2.0 * radar.chirp_slope_hz_per_s * range_m / kLightSpeed;
  const double wavelength = kLightSpeed / radar.carrier_hz;
  const double doppler_hz = 2.0 * radial_velocity_mps / wavelength;
  Scatterer s;
  s.range_bin = beat_hz * static_cast<double>(dims.samples) / radar.sample_rate_hz;
  const double chirp_cycles = doppler_hz * radar.chirp_period_s * static_cast<double>(dims.chirps);
  const double c = static_cast<double>(dims.chirps);
  s.doppler_bin = std::fmod(std::fmod(chirp_cycles, c) + c, c);
  s.angle_freq = radar.element_spacing_wavelengths * sin_angle;
  s.amplitude = amplitude;
  s.phase = phase;
  return s;
}

void SceneScript::validate() const {
  require(frame_count >= 1, "SceneScript: frame_count must be >= 1");
  require(joints.size() == joint_count, "SceneScript: joint list size != joint_count");
  for (const auto& traj : joints) {
    require(traj.size() == frame_count, "SceneScript: trajectory not defined for every frame");
    for (const auto& s : traj) {
      require(std::isfinite(s.image_x) && std::isfinite(s.image_y) && std::isfinite(s.depth) &&
                  std::isfinite(s.radial_velocity),
              "SceneScript: non-finite joint state");
      require(s.image_x >= 0.0 && s.image_x <= image_width && s.image_y >= 0.0 &&
                  s.image_y <= image_height,
              "SceneScript: joint outside image bounds");
    }
  }
}

PoseWindow SceneScript::poses(std::size_t first_frame, std::size_t count) const {
  require(first_frame + count <= frame_count, "SceneScript::poses: range exceeds frame_count");
  PoseWindow w(count, joint_count);
  for (std::size_t f = 0; f < count; ++f) {
    w.frame_ids.push_back(first_frame + f);
    for (std::size_t j = 0; j < joint_count; ++j) {
      const auto& s = joints[j][first_frame + f];
      w.x(f, j) = s.image_x / image_width;
      w.y(f, j) = s.image_y / image_height;
    }
  }
  return w;
}

std::vector<Scatterer> pose_to_scatterers(const SceneScript& script, std::size_t frame, View view,
                                          const SensorMapping& mapping, CubeDims dims) {
  require(frame < script.frame_count, "pose_to_scatterers: frame out of range");
  std::vector<Scatterer> out;
  out.reserve(script.joint_count);
  const double chirps = static_cast<double>(dims.chirps);
  for (std::size_t j = 0; j < script.joint_count; ++j) {
    const auto& s = script.joints[j][frame];
    Scatterer sc;
    if (view == View::kHorizontal) {
      const double half = script.image_width / 2.0;
      sc.angle_freq = mapping.max_angle_freq * (s.image_x - half) / half;
    } else {
      const double half = script.image_height / 2.0;
      sc.angle_freq = mapping.max_angle_freq * (s.image_y - half) / half;
    }
    sc.range_bin = mapping.reference_range_bin +
                   (s.depth - mapping.reference_depth) * mapping.range_bins_per_meter;
    require(sc.range_bin >= 0.0 && sc.range_bin < static_cast<double>(dims.samples),
            "pose_to_scatterers: joint depth maps outside the range axis");
    const double d = s.radial_velocity * mapping.doppler_bins_per_mps;
    sc.doppler_bin = std::fmod(std::fmod(d, chirps) + chirps, chirps);
    sc.amplitude = mapping.amplitude;
    // Golden-angle phases keep joints from interfering coherently.
    sc.phase = std::fmod(static_cast<double>(j) * 2.399963229728653, kTwoPi);
    out.push_back(sc);
  }
  return out;
}

SceneScript make_scene(const SceneSpec& spec, std::uint64_t seed) {
  require(spec.frame_count >= 1, "make_scene: frame_count must be >= 1");
  require(spec.joint_count == kDefaultJoints, "make_scene: the synthetic skeleton has 14 joints");
  require(spec.frame_rate > 0.0, "make_scene: frame_rate must be positive");
  std::mt19937_64 rng(mix(seed));
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  std::uniform_real_distribution<double> slow(0.05, 0.15);
  std::uniform_real_distribution<double> fast(0.3, 0.6);
  std::uniform_real_distribution<double> scale(0.6, 1.0);

  const double drift_fx = slow(rng), drift_fy = slow(rng), depth_f = slow(rng);
  const double drift_px = phase(rng), drift_py = phase(rng), depth_p = phase(rng);
  const double limb_f = fast(rng), limb_p = phase(rng), limb_scale = scale(rng);

  SceneScript script;
  script.frame_count = spec.frame_count;
  script.joint_count = spec.joint_count;
  script.image_width = spec.image_width;
  script.image_height = spec.image_height;
  script.joints.assign(spec.joint_count, std::vector<JointState>(spec.frame_count));

  const double body_px = spec.body_height * spec.image_height;
  for (std::size_t f = 0; f < spec.frame_count; ++f) {
    const double t = static_cast<double>(f) / spec.frame_rate;
    const double cx = spec.image_width * (0.5 + spec.drift_amplitude * std::sin(kTwoPi * drift_fx * t + drift_px));
    const double cy = spec.image_height * (0.5 + spec.drift_amplitude * std::sin(kTwoPi * drift_fy * t + drift_py));
    const double w_depth = kTwoPi * depth_f;
    const double body_depth = spec.base_depth + spec.depth_amplitude * std::sin(w_depth * t + depth_p);
    const double body_vel = spec.depth_amplitude * w_depth * std::cos(w_depth * t + depth_p);
    const double w_limb = kTwoPi * limb_f;
    const double swing = std::sin(w_limb * t + limb_p);
    const double swing_rate = w_limb * std::cos(w_limb * t + limb_p);
    for (std::size_t j = 0; j < spec.joint_count; ++j) {
      const double amp = spec.limb_amplitude * limb_scale * kSwing[j];
      JointState& s = script.joints[j][f];
      s.image_x = cx + body_px * (kTemplate[j][0] + amp * swing);
      s.image_y = cy + body_px * (kTemplate[j][1] - 0.25 * std::abs(amp) * swing * swing);
      // Swinging limbs also move toward/away from the radar.
      const double limb_depth = 0.3 * amp * swing;
      s.depth = body_depth + spec.joint_depth_spread * kDepthOffset[j] + limb_depth;
      s.radial_velocity = body_vel + 0.3 * amp * swing_rate;
    }
  }
  script.validate();
  return script;
}

void for_each_frame(const SceneScript& script, const SceneSpec& spec, std::uint64_t seed,
                    const DatasetOptions& options,
                    const std::function<void(std::size_t, FrameCubes&&)>& sink) {
  for (std::size_t f = 0; f < script.frame_count; ++f) {
    FrameCubes fc;
    for (View v : {View::kHorizontal, View::kVertical}) {
      const auto sc = pose_to_scatterers(script, f, v, options.mapping, options.dims);
      RadarCube cube = synthesize_cube(sc, options.dims, f, v);
      add_noise(cube, spec.noise_stddev, seed);
      (v == View::kHorizontal ? fc.horizontal : fc.vertical) = std::move(cube);
    }
    sink(f, std::move(fc));
  }
}

Dataset generate_dataset(const SceneSpec& spec, std::size_t window_frames, std::uint64_t seed,
                         const DatasetOptions& options) {
  require(window_frames >= 1 && window_frames % 2 == 1,
          "generate_dataset: window length T must be odd");
  require(spec.frame_count >= window_frames, "generate_dataset: fewer frames than T");
  Dataset ds;
  ds.script = make_scene(spec, seed);
  ds.window_frames = window_frames;
  ds.frames.reserve(spec.frame_count);
  for_each_frame(ds.script, spec, seed, options,
                 [&](std::size_t, FrameCubes&& fc) { ds.frames.push_back(std::move(fc)); });
  return ds;
}

void Dataset::write(std::ostream& os) const {
  for (const auto& f : frames) {
    write_cube(os, f.horizontal);
    write_cube(os, f.vertical);
  }
}

void write_cube(std::ostream& os, const RadarCube& cube) {
  require(cube.samples.size() == cube.dims.size(), "write_cube: sample count does not match dims");
  io::write_magic(os, "MMRC");
  io::write_u32(os, kCubeFormatVersion);
  io::write_u32(os, static_cast<std::uint32_t>(cube.dims.antennas));
  io::write_u32(os, static_cast<std::uint32_t>(cube.dims.chirps));
  io::write_u32(os, static_cast<std::uint32_t>(cube.dims.samples));
  io::write_u32(os, static_cast<std::uint32_t>(cube.view));
  io::write_u64(os, cube.frame_index);
  for (const auto& v : cube.samples) {
    io::write_f32(os, static_cast<float>(v.real()));
    io::write_f32(os, static_cast<float>(v.imag()));
  }
}

bool read_cube(std::istream& is, RadarCube& cube) {
  if (!io::read_magic(is, "MMRC")) return false;
  const auto version = io::read_u32(is);
  require(version == kCubeFormatVersion, "read_cube: unsupported version " + std::to_string(version));
  CubeDims dims;
  dims.antennas = io::read_u32(is);
  dims.chirps = io::read_u32(is);
  dims.samples = io::read_u32(is);
  require(dims.antennas > 0 && dims.chirps > 0 && dims.samples > 0, "read_cube: empty dims");
  const auto view = io::read_u32(is);
  require(view <= 1, "read_cube: unknown view tag");
  cube = RadarCube(dims, io::read_u64(is), static_cast<View>(view));
  for (auto& v : cube.samples) {
    const float re = io::read_f32(is);
    const float im = io::read_f32(is);
    require(std::isfinite(re) && std::isfinite(im), "read_cube: non-finite sample");
    v = Complex(re, im);
  }
  return true;
}

std::vector<RadarCube> read_cube_stream(std::istream& is) {
  std::vector<RadarCube> out;
  RadarCube cube;
  while (read_cube(is, cube)) out.push_back(std::move(cube));
  return out;
}

}  // namespace millimamba::radar
