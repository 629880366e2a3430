#include "millimamba/decoder.hpp"

#include "millimamba/error.hpp"
#include "millimamba/ops.hpp"

namespace millimamba::decoder {

namespace ops = tensor;

std::string strategy_name(Strategy s) { return s == Strategy::kManyToMany ? "many_to_many" : "many_to_one"; }

Strategy parse_strategy(const std::string& s) {
  if (s == "many_to_many") return Strategy::kManyToMany;
  if (s == "many_to_one") return Strategy::kManyToOne;
  fail("unknown prediction strategy '" + s + "' (expected many_to_many or many_to_one)");
}

void DecoderConfig::validate() const {
  require(layers >= 1, "decoder: layers must be >= 1");
  require(heads >= 1 && d_model % heads == 0, "decoder: d_model must be divisible by heads");
  require(joints >= 1 && frames >= 1, "decoder: joints and frames must be >= 1");
  require(memory_dim >= 1 && mlp_ratio >= 1, "decoder: memory_dim and mlp_ratio must be >= 1");
}

DecoderLayer::DecoderLayer(ParamStore& store, const std::string& name, const DecoderConfig& cfg)
    : temporal_enabled_(cfg.strategy == Strategy::kManyToMany) {
  const std::size_t d = cfg.d_model;
  sa_norm_ = nn::LayerNorm(store, name + ".sa.norm", d);
  sa_ = MultiHeadAttention(store, name + ".sa", d, cfg.heads);
  if (temporal_enabled_) {
    ta_norm_ = nn::LayerNorm(store, name + ".ta.norm", d);
    ta_ = MultiHeadAttention(store, name + ".ta", d, cfg.heads);
  }
  ca_norm_ = nn::LayerNorm(store, name + ".ca.norm", d);
  ca_ = MultiHeadAttention(store, name + ".ca", d, cfg.heads);
  mlp_norm_ = nn::LayerNorm(store, name + ".mlp.norm", d);
  fc1_ = nn::Linear(store, name + ".mlp.fc1", d, cfg.mlp_ratio * d);
  fc2_ = nn::Linear(store, name + ".mlp.fc2", cfg.mlp_ratio * d, d);
}

Tensor DecoderLayer::operator()(const Tensor& q, const Tensor& keys, const Tensor& values) const {
  Tensor x = ops::add(q, spatial_attention(sa_, sa_norm_(q)));
  if (temporal_enabled_) x = ops::add(x, temporal_attention(ta_, ta_norm_(x)));
  x = ops::add(x, cross_attention(ca_, ca_norm_(x), keys, values));
  return ops::add(x, fc2_(ops::silu(fc1_(mlp_norm_(x)))));
}

Decoder::Decoder(ParamStore& store, const DecoderConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const std::size_t d = cfg_.d_model;
  queries_ = store.normal("decoder.queries", {cfg_.query_frames(), cfg_.joints, d});
  memory_proj_ = nn::Linear(store, "decoder.memory_proj", cfg_.memory_dim, d);
  for (std::size_t i = 0; i < cfg_.layers; ++i)
    layers_.emplace_back(store, "decoder.layer." + std::to_string(i), cfg_);
  head_norm_ = nn::LayerNorm(store, "decoder.head.norm", d);
  head_fc1_ = nn::Linear(store, "decoder.head.fc1", d, d);
  head_fc2_ = nn::Linear(store, "decoder.head.fc2", d, 2);
}

Tensor Decoder::decode(const Tensor& memory, const Tensor& pos) const {
  require(memory.rank() == 2 && memory.dim(1) == cfg_.memory_dim, "decode: memory must be [N][C_f]");
  require(pos.shape() == memory.shape(), "decode: positional tokens must match memory shape");
  Tensor values = memory_proj_(memory);
  // Keys carry location: positions go through the same projection, minus bias.
  Tensor keys = ops::add(values, ops::matmul(pos, memory_proj_.weight));
  Tensor x = queries_;
  for (const auto& layer : layers_) x = layer(x, keys, values);
  Tensor h = ops::silu(head_fc1_(head_norm_(x)));
  return ops::sigmoid(head_fc2_(h));
}

}  // namespace millimamba::decoder
