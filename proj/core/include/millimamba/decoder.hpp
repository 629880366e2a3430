#pragma once

#include <string>
#include <vector>

#include "millimamba/attention.hpp"

namespace millimamba::decoder {

enum class Strategy { kManyToMany, kManyToOne };

std::string strategy_name(Strategy s);
Strategy parse_strategy(const std::string& s);

struct DecoderConfig {
  std::size_t layers = 3;   // L_d
  std::size_t heads = 4;
  std::size_t d_model = 32;
  std::size_t joints = 14;  // J
  std::size_t frames = 3;   // T of the input window
  std::size_t memory_dim = 32;  // encoder C_f
  std::size_t mlp_ratio = 4;
  Strategy strategy = Strategy::kManyToMany;

  void validate() const;
  // Frames that carry queries: T for many-to-many, 1 (the center) otherwise.
  std::size_t query_frames() const { return strategy == Strategy::kManyToMany ? frames : 1; }
};

class DecoderLayer {
 public:
  DecoderLayer(ParamStore& store, const std::string& name, const DecoderConfig& cfg);

  // q [Tq][J][d]; keys/values [N][d]. Pre-norm residual sublayers in the order
  // spatial, temporal (many-to-many only), cross, MLP.
  Tensor operator()(const Tensor& q, const Tensor& keys, const Tensor& values) const;

  const MultiHeadAttention& spatial() const { return sa_; }
  const MultiHeadAttention& temporal() const { return ta_; }
  const MultiHeadAttention& cross() const { return ca_; }

 private:
  bool temporal_enabled_;
  nn::LayerNorm sa_norm_, ta_norm_, ca_norm_, mlp_norm_;
  MultiHeadAttention sa_, ta_, ca_;
  nn::Linear fc1_, fc2_;
};

class Decoder {
 public:
  Decoder(ParamStore& store, const DecoderConfig& cfg);

  // memory: encoder tokens F' [N][C_f]; pos: positional tokens [N][C_f] in
  // the same scan order. Returns coordinates [Tq][J][2] in [0,1].
  Tensor decode(const Tensor& memory, const Tensor& pos) const;

  const DecoderConfig& config() const { return cfg_; }
  const std::vector<DecoderLayer>& layers() const { return layers_; }

 private:
  DecoderConfig cfg_;
  Tensor queries_;  // [Tq][J][d]
  nn::Linear memory_proj_;
  std::vector<DecoderLayer> layers_;
  nn::LayerNorm head_norm_;
  nn::Linear head_fc1_, head_fc2_;
};

}  // namespace millimamba::decoder
