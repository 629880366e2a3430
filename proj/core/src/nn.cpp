#include "millimamba/nn.hpp"

namespace millimamba::nn {

Linear::Linear(ParamStore& store, const std::string& name, std::size_t in, std::size_t out, bool with_bias)
    : weight(store.normal(name + ".weight", {in, out})) {
  if (with_bias) bias = store.constant(name + ".bias", {out}, 0.0);
}

Tensor Linear::operator()(const Tensor& x) const {
  Tensor y = tensor::matmul(x, weight);
  return bias.defined() ? tensor::add(y, bias) : y;
}

LayerNorm::LayerNorm(ParamStore& store, const std::string& name, std::size_t dim)
    : gamma(store.constant(name + ".gamma", {dim}, 1.0)), beta(store.constant(name + ".beta", {dim}, 0.0)) {}

}  // namespace millimamba::nn
