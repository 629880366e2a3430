#pragma once

#include <string>

#include "millimamba/ops.hpp"
#include "millimamba/params.hpp"

namespace millimamba::nn {

using tensor::ParamStore;
using tensor::Tensor;

// y = x W + b over the last dim; W is [in][out].
struct Linear {
  Tensor weight;
  Tensor bias;  // undefined when built without bias

  Linear() = default;
  Linear(ParamStore& store, const std::string& name, std::size_t in, std::size_t out, bool with_bias = true);

  Tensor operator()(const Tensor& x) const;
};

struct LayerNorm {
  Tensor gamma;
  Tensor beta;

  LayerNorm() = default;
  LayerNorm(ParamStore& store, const std::string& name, std::size_t dim);

  Tensor operator()(const Tensor& x) const { return tensor::layer_norm(x, gamma, beta); }
};

}  // namespace millimamba::nn
