#include "millimamba/tensor.hpp"

#include <cassert>
#include <cmath>
#include <sstream>

#include "millimamba/error.hpp"

namespace millimamba::tensor {
namespace {

thread_local Tape* g_tape = nullptr;

}  // namespace

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, std::vector<double> data) : impl_(std::make_shared<TensorImpl>()) {
  for (auto d : shape) require(d > 0, "Tensor: dimensions must be positive, got " + to_string(shape));
  require(numel(shape) == data.size(), "Tensor: shape " + to_string(shape) + " does not match " +
                                           std::to_string(data.size()) + " values");
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
}

Tensor Tensor::zeros(Shape shape) {
  const auto n = numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::full(Shape shape, double value) {
  const auto n = numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

Tensor Tensor::parameter(Shape shape, std::vector<double> data) {
  Tensor t(std::move(shape), std::move(data));
  t.impl_->requires_grad = true;
  return t;
}

double Tensor::item() const {
  require(size() == 1, "Tensor::item: tensor has " + std::to_string(size()) + " elements");
  return impl_->data[0];
}

std::vector<double>& Tensor::grad_buffer() {
  if (impl_->grad.size() != impl_->data.size()) impl_->grad.assign(impl_->data.size(), 0.0);
  return impl_->grad;
}

void Tensor::zero_grad() { impl_->grad.clear(); }

Tensor Tensor::clone() const {
  Tensor t(impl_->shape, impl_->data);
  t.impl_->requires_grad = impl_->requires_grad;
  return t;
}

Tensor Tensor::detach() const { return Tensor(impl_->shape, impl_->data); }

void Tape::record(std::span<const Tensor> inputs, Tensor& output, BackwardFn backward) {
  Node node;
  const auto id = static_cast<std::int64_t>(nodes_.size());
  for (const auto& in : inputs) {
    // Inputs are either leaves or earlier nodes, so insertion order is a
    // topological order.
    assert(in.impl()->node_id < id);
    node.inputs.push_back(in.impl()->node_id);
  }
  output.set_requires_grad(true);
  output.impl()->node_id = id;
  node.output = output.shared();
  node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
}

void Tape::backward(const Tensor& loss) {
  require(loss.defined() && loss.size() == 1, "Tape::backward: loss must be a scalar");
  require(loss.requires_grad(), "Tape::backward: loss does not depend on any parameter");
  Tensor seed = loss;
  seed.grad_buffer()[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (it->output->grad.empty()) continue;  // no path to the loss
    it->backward();
  }
}

void Tape::clear() {
  for (auto& n : nodes_) {
    n.output->node_id = -1;
    n.output->requires_grad = false;
  }
  nodes_.clear();
}

Tape* active_tape() { return g_tape; }

TapeScope::TapeScope(Tape& tape) : previous_(g_tape) { g_tape = &tape; }
TapeScope::~TapeScope() { g_tape = previous_; }

NoGradGuard::NoGradGuard() : previous_(g_tape) { g_tape = nullptr; }
NoGradGuard::~NoGradGuard() { g_tape = previous_; }

bool should_record(std::span<const Tensor> inputs) {
  if (g_tape == nullptr) return false;
  for (const auto& t : inputs) {
    if (t.defined() && t.requires_grad()) return true;
  }
  return false;
}

bool should_record(std::initializer_list<Tensor> inputs) {
  return should_record(std::span<const Tensor>(inputs.begin(), inputs.size()));
}

std::vector<double>* grad_sink(const std::shared_ptr<TensorImpl>& t) {
  if (!t || !t->requires_grad) return nullptr;
  if (t->grad.size() != t->data.size()) t->grad.assign(t->data.size(), 0.0);
  return &t->grad;
}

void check_finite(const Tensor& t, const char* op) {
  for (double v : t.data()) {
    if (!std::isfinite(v)) throw NumericError(std::string(op) + ": non-finite result");
  }
}

}  // namespace millimamba::tensor
