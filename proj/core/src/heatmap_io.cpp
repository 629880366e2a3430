#include <cmath>
#include <istream>
#include <ostream>

#include "millimamba/binary_io.hpp"
#include "millimamba/dsp.hpp"
#include "millimamba/error.hpp"

namespace millimamba::dsp {
namespace {

constexpr std::uint32_t kHeatmapVersion = 1;

void write_values(std::ostream& os, const ComplexBuffer& values) {
  for (const auto& v : values) {
    io::write_f32(os, static_cast<float>(v.real()));
    io::write_f32(os, static_cast<float>(v.imag()));
  }
}

void read_values(std::istream& is, ComplexBuffer& values) {
  for (auto& v : values) {
    const float re = io::read_f32(is);
    const float im = io::read_f32(is);
    require(std::isfinite(re) && std::isfinite(im), "read_heatmap: non-finite value");
    v = Complex(re, im);
  }
}

std::uint32_t read_dim(std::istream& is) {
  const auto d = io::read_u32(is);
  require(d > 0, "read_heatmap: zero dimension");
  return d;
}

}  // namespace

void write_heatmap(std::ostream& os, const Heatmap3D& hm) {
  io::write_magic(os, "MMH3");
  io::write_u32(os, kHeatmapVersion);
  io::write_u32(os, static_cast<std::uint32_t>(hm.angle));
  io::write_u32(os, static_cast<std::uint32_t>(hm.doppler));
  io::write_u32(os, static_cast<std::uint32_t>(hm.range));
  io::write_u32(os, static_cast<std::uint32_t>(hm.view));
  io::write_u64(os, hm.frame_index);
  write_values(os, hm.values);
}

void write_heatmap(std::ostream& os, const Heatmap4D& hm) {
  io::write_magic(os, "MMH4");
  io::write_u32(os, kHeatmapVersion);
  io::write_u32(os, static_cast<std::uint32_t>(hm.azimuth));
  io::write_u32(os, static_cast<std::uint32_t>(hm.elevation));
  io::write_u32(os, static_cast<std::uint32_t>(hm.doppler));
  io::write_u32(os, static_cast<std::uint32_t>(hm.range));
  io::write_u32(os, static_cast<std::uint32_t>(hm.view));
  io::write_u64(os, hm.frame_index);
  write_values(os, hm.values);
}

bool read_heatmap(std::istream& is, Heatmap3D& hm) {
  if (!io::read_magic(is, "MMH3")) return false;
  require(io::read_u32(is) == kHeatmapVersion, "read_heatmap: unsupported MMH3 version");
  hm = Heatmap3D{};
  hm.angle = read_dim(is);
  hm.doppler = read_dim(is);
  hm.range = read_dim(is);
  const auto view = io::read_u32(is);
  require(view <= 1, "read_heatmap: unknown view tag");
  hm.view = static_cast<View>(view);
  hm.frame_index = io::read_u64(is);
  hm.values.resize(hm.angle * hm.doppler * hm.range);
  read_values(is, hm.values);
  return true;
}

bool read_heatmap(std::istream& is, Heatmap4D& hm) {
  if (!io::read_magic(is, "MMH4")) return false;
  require(io::read_u32(is) == kHeatmapVersion, "read_heatmap: unsupported MMH4 version");
  hm = Heatmap4D{};
  hm.azimuth = read_dim(is);
  hm.elevation = read_dim(is);
  hm.doppler = read_dim(is);
  hm.range = read_dim(is);
  const auto view = io::read_u32(is);
  require(view <= 1, "read_heatmap: unknown view tag");
  hm.view = static_cast<View>(view);
  hm.frame_index = io::read_u64(is);
  hm.values.resize(hm.azimuth * hm.elevation * hm.doppler * hm.range);
  read_values(is, hm.values);
  return true;
}

}  // namespace millimamba::dsp
