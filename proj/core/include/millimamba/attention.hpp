#pragma once

#include <string>

#include "millimamba/nn.hpp"

namespace millimamba::decoder {

using tensor::ParamStore;
using tensor::Tensor;

// Multi-head scaled dot-product attention with per-head scale 1/sqrt(d_head).
class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(ParamStore& store, const std::string& name, std::size_t d_model, std::size_t heads);

  // query [B][Lq][d], key/value [B][Lk][d]; batches never interact.
  // `weights`, when given, receives the attention map [B][heads][Lq][Lk].
  Tensor operator()(const Tensor& query, const Tensor& key, const Tensor& value, Tensor* weights = nullptr) const;

  std::size_t heads() const { return heads_; }

 private:
  Tensor split_heads(const Tensor& x) const;  // [B][L][d] -> [B*h][L][dh]

  std::size_t d_model_ = 0;
  std::size_t heads_ = 1;
  nn::Linear q_, k_, v_, o_;
};

// Self-attention over joints within each frame; q is [T][J][d].
Tensor spatial_attention(const MultiHeadAttention& mha, const Tensor& q, Tensor* weights = nullptr);
// Self-attention over frames for each joint; q is [T][J][d].
Tensor temporal_attention(const MultiHeadAttention& mha, const Tensor& q, Tensor* weights = nullptr);
// Every query attends to all memory tokens; keys/values are [N][d].
Tensor cross_attention(const MultiHeadAttention& mha, const Tensor& q, const Tensor& keys, const Tensor& values,
                       Tensor* weights = nullptr);

}  // namespace millimamba::decoder
