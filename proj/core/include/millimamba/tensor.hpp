#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace millimamba::tensor {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until something flows into it
  bool requires_grad = false;
  std::int64_t node_id = -1;  // position on the recording tape, -1 for leaves
};

// Dense row-major double tensor with shared storage. Copies alias; use
// clone() for a deep copy.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);
  // Leaf that accumulates gradients.
  static Tensor parameter(Shape shape, std::vector<double> data);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t dim(std::size_t i) const { return impl_->shape.at(i); }
  std::size_t size() const { return impl_->data.size(); }

  std::span<const double> data() const { return impl_->data; }
  std::span<double> mutable_data() { return impl_->data; }
  double item() const;
  double operator[](std::size_t i) const { return impl_->data[i]; }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool v) { impl_->requires_grad = v; }
  // Zero-length span when no gradient has been accumulated.
  std::span<const double> grad() const { return impl_->grad; }
  std::vector<double>& grad_buffer();  // sized to data on first use
  void zero_grad();

  Tensor clone() const;
  Tensor detach() const;

  TensorImpl* impl() const { return impl_.get(); }
  const std::shared_ptr<TensorImpl>& shared() const { return impl_; }

 private:
  std::shared_ptr<TensorImpl> impl_;
};

// Append-only record of differentiable operations. Ops record themselves on
// the tape installed for the current thread by a TapeScope; with no tape they
// only compute values.
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Registers `output` as produced from `inputs`; `backward` reads the output
  // gradient and accumulates into the inputs.
  void record(std::span<const Tensor> inputs, Tensor& output, BackwardFn backward);

  // Seeds d(loss)/d(loss) = 1 and visits nodes in reverse insertion order.
  void backward(const Tensor& loss);

  std::size_t size() const { return nodes_.size(); }
  void clear();

 private:
  struct Node {
    std::vector<std::int64_t> inputs;
    std::shared_ptr<TensorImpl> output;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

Tape* active_tape();

class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

// Suspends recording for the lifetime of the guard.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  Tape* previous_;
};

// True when an op over `inputs` must be recorded.
bool should_record(std::span<const Tensor> inputs);
bool should_record(std::initializer_list<Tensor> inputs);

// Gradient buffer of `t` sized to its data, or nullptr if it does not require
// grad. For use inside backward closures of custom ops.
std::vector<double>* grad_sink(const std::shared_ptr<TensorImpl>& t);

// Throws NumericError naming `op` if any value is NaN/Inf.
void check_finite(const Tensor& t, const char* op);

}  // namespace millimamba::tensor
