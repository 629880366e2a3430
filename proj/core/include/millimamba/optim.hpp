#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "millimamba/tensor.hpp"

namespace millimamba::tensor {

struct AdamOptions {
  double lr = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;  // decoupled: w -= lr * wd * w before the Adam update
};

// Bias-corrected Adam with decoupled weight decay.
class Adam {
 public:
  explicit Adam(std::span<const Tensor> params, AdamOptions options = {});

  // Uses each parameter's accumulated gradient (missing gradients count as zero).
  void step();
  // Explicit gradients, one vector per parameter.
  void step(std::span<const std::vector<double>> grads);

  std::uint64_t steps() const { return step_; }
  const AdamOptions& options() const { return options_; }
  const std::vector<std::vector<double>>& first_moment() const { return m_; }
  const std::vector<std::vector<double>>& second_moment() const { return v_; }

 private:
  void update(std::size_t i, std::span<const double> grad);

  std::vector<Tensor> params_;
  AdamOptions options_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::uint64_t step_ = 0;
};

}  // namespace millimamba::tensor
