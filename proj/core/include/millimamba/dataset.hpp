#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "millimamba/config.hpp"

namespace millimamba {

struct WindowSpan {
  std::size_t first = 0;   // window covers [first, first + T)
  std::size_t center = 0;  // first + (T - 1) / 2
};

// Sliding windows of length T; count = (frames - T) / stride + 1.
std::vector<WindowSpan> make_windows(std::size_t frames, std::size_t window_frames, std::size_t stride = 1);

// Preprocessed heatmaps of every frame for the configured views, kept as
// real/imag planes [2][H][D][W] per (frame, view).
class FeatureSequence {
 public:
  FeatureSequence() = default;
  explicit FeatureSequence(const ModelConfig& cfg);

  // Runs the configured DSP chain (3D or folded 4D) on raw cubes.
  static FeatureSequence from_cubes(std::span<const radar::FrameCubes> frames, const ModelConfig& cfg);
  // Interleaved cube stream as written by `simulate` (any view order).
  static FeatureSequence from_cube_stream(std::span<const radar::RadarCube> cubes, const ModelConfig& cfg);
  // Already transformed 3D heatmaps (any view order; frames must be complete).
  static FeatureSequence from_heatmaps(std::span<const dsp::Heatmap3D> maps, const ModelConfig& cfg);

  std::size_t frames() const { return planes_.size(); }
  std::size_t views() const { return views_.size(); }

  // Per configured view, [2][T][H][D][W] for frames [first, first + T), scaled
  // so the largest magnitude in the window is 1.
  std::vector<tensor::Tensor> window_inputs(std::size_t first) const;

  bool operator==(const FeatureSequence&) const = default;

 private:
  void add_frame(std::vector<std::vector<double>> planes, std::vector<double> peaks);

  std::size_t t_ = 0, h_ = 0, d_ = 0, w_ = 0;
  std::vector<std::size_t> views_;
  std::vector<std::vector<std::vector<double>>> planes_;  // [frame][view][2*H*D*W]
  std::vector<std::vector<double>> peaks_;                 // [frame][view] max |Y|
};

// Ground truth plus features for one synthesized sequence.
struct LabeledSequence {
  radar::SceneScript script;
  FeatureSequence features;

  std::size_t window_count(const ModelConfig& cfg) const;
};

// Synthesizes `frames` frames from a scene seeded by `seed` and preprocesses them.
LabeledSequence simulate_sequence(const ModelConfig& cfg, std::size_t frames, std::uint64_t seed);

}  // namespace millimamba
