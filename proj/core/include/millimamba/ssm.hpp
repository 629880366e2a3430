#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "millimamba/tensor.hpp"

namespace millimamba::encoder {

using tensor::Tensor;

enum class Direction { kForward, kBackward };

// Selective scan over L tokens with d channels and n states per channel:
//   h_t = exp(delta_t * A) h_{t-1} + delta_t * B_t * u_t
//   y_t = C_t . h_t + D * u_t
// with h_0 = 0 and the output read from the updated state. The backward
// direction runs t = L-1 .. 0, i.e. reverse(scan(reverse(inputs))).
struct ScanInputs {
  std::size_t length = 0;
  std::size_t channels = 0;
  std::size_t states = 0;
  std::span<const double> u;      // [L][d]
  std::span<const double> delta;  // [L][d], > 0
  std::span<const double> a;      // [d][n], continuous-time, < 0
  std::span<const double> b;      // [L][n]
  std::span<const double> c;      // [L][n]
  std::span<const double> skip;   // [d]
};

std::vector<double> ssm_scan(const ScanInputs& in, Direction direction);

// Differentiable form of ssm_scan. Shapes: u, delta [L][d]; a [d][n];
// b, c [L][n]; skip [d].
Tensor selective_scan(const Tensor& u, const Tensor& delta, const Tensor& a, const Tensor& b,
                      const Tensor& c, const Tensor& skip, Direction direction);

// Depthwise 1D convolution along tokens, x [L][d], weight [d][K], bias [d].
// Forward: y_t = b + sum_k w_k x_{t-K+1+k}; backward mirrors it in time.
Tensor causal_conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias, Direction direction);

}  // namespace millimamba::encoder
