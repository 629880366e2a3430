#include "millimamba/attention.hpp"

#include <cmath>

#include "millimamba/error.hpp"
#include "millimamba/ops.hpp"

namespace millimamba::decoder {

namespace ops = tensor;

MultiHeadAttention::MultiHeadAttention(ParamStore& store, const std::string& name, std::size_t d_model,
                                       std::size_t heads)
    : d_model_(d_model),
      heads_(heads),
      q_(store, name + ".q", d_model, d_model),
      k_(store, name + ".k", d_model, d_model),
      v_(store, name + ".v", d_model, d_model),
      o_(store, name + ".o", d_model, d_model) {
  require(heads >= 1 && d_model % heads == 0, "attention: d_model must be divisible by heads");
}

Tensor MultiHeadAttention::split_heads(const Tensor& x) const {
  const std::size_t b = x.dim(0), l = x.dim(1), dh = d_model_ / heads_;
  Tensor y = ops::reshape(x, {b, l, heads_, dh});
  y = ops::permute(y, {0, 2, 1, 3});
  return ops::reshape(y, {b * heads_, l, dh});
}

Tensor MultiHeadAttention::operator()(const Tensor& query, const Tensor& key, const Tensor& value,
                                      Tensor* weights) const {
  require(query.rank() == 3 && key.rank() == 3 && value.rank() == 3, "attention: inputs must be [B][L][d]");
  require(query.dim(2) == d_model_ && key.dim(2) == d_model_ && value.dim(2) == d_model_,
          "attention: feature dim mismatch");
  require(key.dim(0) == query.dim(0) && value.dim(0) == query.dim(0) && key.dim(1) == value.dim(1),
          "attention: batch or key/value length mismatch");
  const std::size_t b = query.dim(0), lq = query.dim(1), dh = d_model_ / heads_;
  Tensor q = split_heads(q_(query));
  Tensor k = split_heads(k_(key));
  Tensor v = split_heads(v_(value));
  Tensor scores = ops::scale(ops::matmul(q, k, true), 1.0 / std::sqrt(static_cast<double>(dh)));
  Tensor attn = ops::softmax(scores, -1);
  if (weights) *weights = ops::reshape(attn, {b, heads_, lq, key.dim(1)});
  Tensor out = ops::matmul(attn, v);  // [B*h][Lq][dh]
  out = ops::reshape(out, {b, heads_, lq, dh});
  out = ops::permute(out, {0, 2, 1, 3});
  return o_(ops::reshape(out, {b, lq, d_model_}));
}

Tensor spatial_attention(const MultiHeadAttention& mha, const Tensor& q, Tensor* weights) {
  require(q.rank() == 3, "spatial_attention: queries must be [T][J][d]");
  return mha(q, q, q, weights);
}

Tensor temporal_attention(const MultiHeadAttention& mha, const Tensor& q, Tensor* weights) {
  require(q.rank() == 3, "temporal_attention: queries must be [T][J][d]");
  Tensor per_joint = ops::permute(q, {1, 0, 2});
  return ops::permute(mha(per_joint, per_joint, per_joint, weights), {1, 0, 2});
}

Tensor cross_attention(const MultiHeadAttention& mha, const Tensor& q, const Tensor& keys, const Tensor& values,
                       Tensor* weights) {
  require(q.rank() == 3, "cross_attention: queries must be [T][J][d]");
  require(keys.rank() == 2 && values.rank() == 2, "cross_attention: memory must be [N][d]");
  const std::size_t t = q.dim(0), j = q.dim(1), d = q.dim(2), n = keys.dim(0);
  Tensor flat = ops::reshape(q, {1, t * j, d});
  Tensor out = mha(flat, ops::reshape(keys, {1, n, keys.dim(1)}), ops::reshape(values, {1, n, values.dim(1)}),
                   weights);
  return ops::reshape(out, {t, j, d});
}

}  // namespace millimamba::decoder
