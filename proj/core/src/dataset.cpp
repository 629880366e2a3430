#include "millimamba/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "millimamba/error.hpp"

namespace millimamba {

std::vector<WindowSpan> make_windows(std::size_t frames, std::size_t window_frames, std::size_t stride) {
  require(window_frames >= 1 && stride >= 1, "make_windows: T and stride must be >= 1");
  if (frames < window_frames)
    fail("make_windows: " + std::to_string(frames) + " frames cannot fill a window of " +
         std::to_string(window_frames));
  std::vector<WindowSpan> out;
  for (std::size_t first = 0; first + window_frames <= frames; first += stride)
    out.push_back({first, first + (window_frames - 1) / 2});
  return out;
}

FeatureSequence::FeatureSequence(const ModelConfig& cfg)
    : t_(cfg.frames), h_(cfg.input_height()), d_(cfg.input_doppler()), w_(cfg.input_width()), views_(cfg.views) {}

void FeatureSequence::add_frame(std::vector<std::vector<double>> planes, std::vector<double> peaks) {
  planes_.push_back(std::move(planes));
  peaks_.push_back(std::move(peaks));
}

namespace {

// Splits complex values into [re plane][im plane] and returns the peak magnitude.
double split_planes(std::span<const radar::Complex> values, std::vector<double>& out) {
  const std::size_t n = values.size();
  out.assign(2 * n, 0.0);
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = values[i].real();
    out[n + i] = values[i].imag();
    peak = std::max(peak, std::abs(values[i]));
  }
  return peak;
}

}  // namespace

FeatureSequence FeatureSequence::from_cubes(std::span<const radar::FrameCubes> frames, const ModelConfig& cfg) {
  std::vector<radar::RadarCube> cubes;
  for (const auto& f : frames)
    for (std::size_t v : cfg.views) cubes.push_back(f.get(static_cast<radar::View>(v)));
  return from_cube_stream(cubes, cfg);
}

FeatureSequence FeatureSequence::from_cube_stream(std::span<const radar::RadarCube> cubes, const ModelConfig& cfg) {
  const auto opts = cfg.preprocess_options();
  const radar::CubeDims expected{cfg.antennas, cfg.chirps, cfg.samples};
  for (const auto& c : cubes)
    if (!(c.dims == expected))
      fail("cube dims [" + std::to_string(c.dims.antennas) + "][" + std::to_string(c.dims.chirps) + "][" +
           std::to_string(c.dims.samples) + "] do not match the configuration");
  // Keep only configured views, grouped by frame index.
  std::map<std::uint64_t, std::map<std::size_t, const radar::RadarCube*>> by_frame;
  for (const auto& c : cubes) {
    const auto v = static_cast<std::size_t>(c.view);
    if (std::find(cfg.views.begin(), cfg.views.end(), v) != cfg.views.end()) by_frame[c.frame_index][v] = &c;
  }
  FeatureSequence seq(cfg);
  std::uint64_t expected_frame = 0;
  if (cfg.input == InputRepr::kFft3d) {
    std::vector<radar::RadarCube> ordered;
    for (const auto& [frame, views] : by_frame) {
      if (frame != expected_frame++) fail("cube stream: frames must be consecutive from 0");
      for (std::size_t v : cfg.views) {
        auto it = views.find(v);
        if (it == views.end()) fail("cube stream: frame " + std::to_string(frame) + " lacks a configured view");
        ordered.push_back(*it->second);
      }
    }
    const auto maps = dsp::preprocess_batch(ordered, opts, cfg.workers);
    return from_heatmaps(maps, cfg);
  }
  for (const auto& [frame, views] : by_frame) {
    if (frame != expected_frame++) fail("cube stream: frames must be consecutive from 0");
    std::vector<std::vector<double>> planes(cfg.views.size());
    std::vector<double> peaks(cfg.views.size());
    for (std::size_t i = 0; i < cfg.views.size(); ++i) {
      auto it = views.find(cfg.views[i]);
      if (it == views.end()) fail("cube stream: frame " + std::to_string(frame) + " lacks a configured view");
      // [Az][El][D][W] is read as [Az][El*D][W]: elevation folds into doppler.
      const auto hm = dsp::preprocess_4d(*it->second, opts);
      peaks[i] = split_planes(hm.values, planes[i]);
    }
    seq.add_frame(std::move(planes), std::move(peaks));
  }
  return seq;
}

FeatureSequence FeatureSequence::from_heatmaps(std::span<const dsp::Heatmap3D> maps, const ModelConfig& cfg) {
  require(cfg.input == InputRepr::kFft3d, "heatmap input requires input = fft3d");
  FeatureSequence seq(cfg);
  std::map<std::uint64_t, std::map<std::size_t, const dsp::Heatmap3D*>> by_frame;
  for (const auto& m : maps) {
    if (m.angle != seq.h_ || m.doppler != seq.d_ || m.range != seq.w_)
      fail("heatmap dims do not match the configuration");
    by_frame[m.frame_index][static_cast<std::size_t>(m.view)] = &m;
  }
  std::uint64_t expected_frame = 0;
  for (const auto& [frame, views] : by_frame) {
    if (frame != expected_frame++) fail("heatmaps: frames must be consecutive from 0");
    std::vector<std::vector<double>> planes(cfg.views.size());
    std::vector<double> peaks(cfg.views.size());
    for (std::size_t i = 0; i < cfg.views.size(); ++i) {
      auto it = views.find(cfg.views[i]);
      if (it == views.end()) fail("heatmaps: frame " + std::to_string(frame) + " lacks a configured view");
      peaks[i] = split_planes(it->second->values, planes[i]);
    }
    seq.add_frame(std::move(planes), std::move(peaks));
  }
  return seq;
}

std::vector<tensor::Tensor> FeatureSequence::window_inputs(std::size_t first) const {
  require(first + t_ <= frames(), "window_inputs: window exceeds the sequence");
  const std::size_t plane = h_ * d_ * w_;
  std::vector<tensor::Tensor> out;
  for (std::size_t v = 0; v < views_.size(); ++v) {
    double peak = 0.0;
    for (std::size_t f = 0; f < t_; ++f) peak = std::max(peak, peaks_[first + f][v]);
    const double inv = peak > 0.0 ? 1.0 / peak : 1.0;
    std::vector<double> data(2 * t_ * plane);
    for (std::size_t part = 0; part < 2; ++part)
      for (std::size_t f = 0; f < t_; ++f) {
        const auto& src = planes_[first + f][v];
        double* dst = data.data() + (part * t_ + f) * plane;
        for (std::size_t i = 0; i < plane; ++i) dst[i] = src[part * plane + i] * inv;
      }
    out.emplace_back(tensor::Shape{2, t_, h_, d_, w_}, std::move(data));
  }
  return out;
}

std::size_t LabeledSequence::window_count(const ModelConfig& cfg) const {
  return make_windows(features.frames(), cfg.frames, cfg.window_stride).size();
}

LabeledSequence simulate_sequence(const ModelConfig& cfg, std::size_t frames, std::uint64_t seed) {
  auto spec = cfg.scene_spec();
  spec.frame_count = frames;
  LabeledSequence out;
  out.script = radar::make_scene(spec, seed);
  std::vector<radar::FrameCubes> cubes;
  radar::for_each_frame(out.script, spec, seed, cfg.dataset_options(),
                        [&](std::size_t, radar::FrameCubes&& fc) { cubes.push_back(std::move(fc)); });
  out.features = FeatureSequence::from_cubes(cubes, cfg);
  return out;
}

}  // namespace millimamba
