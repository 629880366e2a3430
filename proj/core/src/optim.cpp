#include "millimamba/optim.hpp"

#include <cmath>

#include "millimamba/error.hpp"

namespace millimamba::tensor {

Adam::Adam(std::span<const Tensor> params, AdamOptions options)
    : params_(params.begin(), params.end()), options_(options) {
  for (const auto& p : params_) {
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

void Adam::step() {
  ++step_;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto g = params_[i].grad();
    if (g.empty()) {
      update(i, std::vector<double>(params_[i].size(), 0.0));
    } else {
      update(i, g);
    }
  }
}

void Adam::step(std::span<const std::vector<double>> grads) {
  require(grads.size() == params_.size(), "Adam::step: gradient count does not match parameters");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    require(grads[i].size() == params_[i].size(), "Adam::step: gradient shape mismatch");
  }
  ++step_;
  for (std::size_t i = 0; i < params_.size(); ++i) update(i, grads[i]);
}

void Adam::update(std::size_t i, std::span<const double> grad) {
  const auto& o = options_;
  const double t = static_cast<double>(step_);
  const double bc1 = 1.0 - std::pow(o.beta1, t);
  const double bc2 = 1.0 - std::pow(o.beta2, t);
  auto w = params_[i].mutable_data();
  auto& m = m_[i];
  auto& v = v_[i];
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double g = grad[k];
    w[k] -= o.lr * o.weight_decay * w[k];
    m[k] = o.beta1 * m[k] + (1.0 - o.beta1) * g;
    v[k] = o.beta2 * v[k] + (1.0 - o.beta2) * g * g;
    const double mhat = m[k] / bc1;
    const double vhat = v[k] / bc2;
    w[k] -= o.lr * mhat / (std::sqrt(vhat) + o.eps);
  }
}

}  // namespace millimamba::tensor
