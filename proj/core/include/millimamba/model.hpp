#pragma once

#include <span>
#include <string>

#include "millimamba/config.hpp"
#include "millimamba/params.hpp"

namespace millimamba {

// Encoder + decoder with parameters initialized from cfg.seed.
class Model {
 public:
  explicit Model(const ModelConfig& cfg);

  // One [2][T][H][D][W] input per configured view -> coordinates [Tq][J][2].
  tensor::Tensor forward(std::span<const tensor::Tensor> views) const;

  // Ground truth matched to the output rows: the whole window for
  // many-to-many, the centre frame for many-to-one.
  PoseWindow target(const PoseWindow& window) const;
  // Output row holding the centre-frame prediction.
  std::size_t center_row() const;

  const ModelConfig& config() const { return cfg_; }
  tensor::ParamStore& params() { return store_; }
  const tensor::ParamStore& params() const { return store_; }
  const encoder::Encoder& encoder() const { return encoder_; }
  const decoder::Decoder& decoder() const { return decoder_; }

  void save(const std::string& path) const;
  // Throws ValidationError when the checkpoint does not match this config.
  void load(const std::string& path);

 private:
  ModelConfig cfg_;
  tensor::ParamStore store_;
  encoder::Encoder encoder_;
  decoder::Decoder decoder_;
};

}  // namespace millimamba
