#pragma once

#include <cstdint>

#include "millimamba/decoder.hpp"
#include "millimamba/gradcheck.hpp"

namespace millimamba {

// Small end-to-end model (encoder, decoder, total loss) for gradient checks.
struct TinyModelSpec {
  std::size_t frames = 3;
  std::size_t joints = 4;
  std::size_t height = 16;
  std::size_t doppler = 4;
  std::size_t width = 32;
  std::size_t channels = 8;
  std::size_t encoder_layers = 1;
  std::size_t d_state = 4;
  std::size_t views = 2;
  std::size_t decoder_layers = 1;
  std::size_t d_model = 16;
  std::size_t heads = 2;
  decoder::Strategy strategy = decoder::Strategy::kManyToMany;
  double lambda_vel = 0.05;
  // Parameters are jittered by N(0, jitter) after initialization so that
  // gradients are not dominated by the near-zero default weights.
  double jitter = 0.1;
  std::uint64_t seed = 0;
};

// Central-difference check of d(total loss)/d(parameters) on random inputs
// and a random target pose.
tensor::GradCheckReport end_to_end_gradcheck(const TinyModelSpec& spec, const tensor::GradCheckOptions& options);

}  // namespace millimamba
