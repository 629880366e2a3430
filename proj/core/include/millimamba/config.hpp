#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "millimamba/decoder.hpp"
#include "millimamba/dsp.hpp"
#include "millimamba/encoder.hpp"
#include "millimamba/objective.hpp"
#include "millimamba/radar_sim.hpp"

namespace millimamba {

enum class InputRepr { kFft3d, kFft4d };

// Every architectural, data and training knob. Serialized as a flat
// "key = value" text file; '#' starts a comment; unknown keys are errors.
struct ModelConfig {
  // Window and data.
  std::size_t frames = 9;  // T, odd
  std::size_t window_stride = 1;
  std::size_t antennas = 12;
  std::size_t chirps = 32;
  std::size_t samples = 32;  // W
  std::size_t chirp_target = 8;  // D
  std::size_t angle_pad = 16;    // H
  std::size_t elevation_pad = 8;
  dsp::Window window = dsp::Window::kRect;
  InputRepr input = InputRepr::kFft3d;
  std::vector<std::size_t> views{0, 1};  // 0 = horizontal, 1 = vertical
  std::size_t scene_frames = 64;
  double noise = 0.0;

  // Encoder.
  std::size_t channels = 32;
  std::size_t encoder_layers = 4;
  std::size_t d_state = 16;
  std::size_t expand = 2;
  std::size_t conv_kernel = 4;
  encoder::ScanOrder scan = encoder::ScanOrder::kRaster;
  encoder::EncoderType encoder_type = encoder::EncoderType::kMamba;

  // Decoder.
  std::size_t decoder_layers = 3;
  std::size_t heads = 4;
  std::size_t d_model = 32;
  std::size_t joints = kDefaultJoints;
  decoder::Strategy strategy = decoder::Strategy::kManyToMany;

  // Objective.
  double lambda_vel = 0.05;
  objective::ScaleMode oks_scale = objective::ScaleMode::kBboxDiagonal;
  double oks_fixed_scale = 1.0;

  // Training.
  std::size_t batch = 8;
  double lr = 5e-5;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t steps = 2000;
  std::size_t checkpoint_every = 0;  // 0 disables periodic checkpoints
  std::uint64_t seed = 0;
  std::string precision = "double";
  std::size_t workers = 1;

  void validate() const;

  static ModelConfig parse(const std::string& text);
  static ModelConfig load(const std::string& path);
  std::string serialize() const;
  // Applies a single "key" / "value" assignment with the same validation as parse.
  void set(const std::string& key, const std::string& value);

  // Dims of the per-view encoder input [2][T][H][D][W].
  std::size_t input_height() const { return angle_pad; }
  std::size_t input_doppler() const { return input == InputRepr::kFft4d ? chirp_target * elevation_pad : chirp_target; }
  std::size_t input_width() const { return samples; }

  encoder::EncoderConfig encoder_config() const;
  decoder::DecoderConfig decoder_config() const;
  objective::OksParams oks_params() const;
  dsp::PreprocessOptions preprocess_options() const;
  radar::DatasetOptions dataset_options() const;
  radar::SceneSpec scene_spec() const;

  bool operator==(const ModelConfig&) const = default;
};

std::string input_repr_name(InputRepr r);
std::string views_name(const std::vector<std::size_t>& views);

}  // namespace millimamba
