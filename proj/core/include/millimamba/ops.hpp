#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "millimamba/tensor.hpp"

// Differentiable operations. Every op checks its output for NaN/Inf and
// records a backward closure when a tape is active and an input requires grad.
namespace millimamba::tensor {

// Elementwise binary ops. `b` may have the same shape as `a`, be a shape
// suffix of `a` (broadcast over leading dims), or hold a single value.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double value);

Tensor exp(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor silu(const Tensor& x);
Tensor softplus(const Tensor& x);
Tensor square(const Tensor& x);

// a: [..., M, K]; b: [K, N] (shared across the batch) or [..., K, N] with the
// same leading dims. With transpose_b, b is [..., N, K].
Tensor matmul(const Tensor& a, const Tensor& b, bool transpose_b = false);

struct Conv3dOptions {
  std::array<std::size_t, 3> stride{1, 1, 1};
  std::array<std::size_t, 3> pad{0, 0, 0};
};

// x: [Cin][D][H][W], weight: [Cout][Cin][kd][kh][kw], bias: [Cout] or undefined.
Tensor conv3d(const Tensor& x, const Tensor& weight, const Tensor& bias, const Conv3dOptions& options);
// Zero "same" padding for odd kernels, unit stride.
Tensor conv3d_same(const Tensor& x, const Tensor& weight, const Tensor& bias);

// Non-overlapping average pooling of [C][D][H][W]; dims must be divisible.
Tensor avg_pool3d(const Tensor& x, std::array<std::size_t, 3> kernel);

// Normalizes over the last dim; gamma/beta have the size of that dim.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

// Negative axis counts from the end.
Tensor softmax(const Tensor& x, int axis = -1);

Tensor reshape(const Tensor& x, Shape shape);
Tensor permute(const Tensor& x, const std::vector<std::size_t>& order);
Tensor concat(std::span<const Tensor> parts, std::size_t axis);
Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end);
// Rows of x (axis 0) selected by `indices`; repeated indices accumulate grads.
Tensor gather(const Tensor& x, std::span<const std::size_t> indices);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
// Sums over `axis` and drops it (rank-1 input gives shape [1]).
Tensor sum_axis(const Tensor& x, std::size_t axis);

}  // namespace millimamba::tensor
