#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "millimamba/tensor.hpp"

namespace millimamba::tensor {

struct GradCheckOptions {
  std::size_t samples = 20;   // coordinates per check (all if the total is smaller)
  double h = 1e-5;            // step is h * max(1, |theta|)
  double tolerance = 1e-4;
  double abs_floor = 1e-7;    // denominators below this count as this
  std::uint64_t seed = 0;
};

struct GradCheckEntry {
  std::size_t param = 0;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  bool passed = false;
  std::vector<GradCheckEntry> entries;
  std::string summary() const;
};

// Compares tape gradients of the scalar `fn` with central differences at
// randomly sampled coordinates of `params`. fn must be deterministic; it is
// called once under a tape and twice per sampled coordinate without one.
GradCheckReport grad_check(const std::function<Tensor()>& fn, std::span<const Tensor> params,
                           const GradCheckOptions& options = {});

inline GradCheckReport grad_check(const std::function<Tensor()>& fn, std::initializer_list<Tensor> params,
                                  const GradCheckOptions& options = {}) {
  return grad_check(fn, std::span<const Tensor>(params.begin(), params.size()), options);
}

}  // namespace millimamba::tensor
