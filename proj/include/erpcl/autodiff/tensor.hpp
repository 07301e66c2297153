#pragma once

#include <cstddef>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace erpcl {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

template <class T>
struct TensorStorage {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until first accumulation
  bool requires_grad = false;
};

/// Shared handle to a dense row-major array with an optional gradient accumulator.
///
/// Copies alias the same storage. Values produced by ops are not modified after
/// construction; only leaves (parameters) are written in place by the optimizer.
template <class T>
class Tensor {
 public:
  Tensor();

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<T> data, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const { return impl_->data.size(); }

  std::span<const T> data() const { return impl_->data; }
  std::span<T> mutable_data() { return impl_->data; }
  T item() const;
  T at(std::size_t i) const { return impl_->data[i]; }
  T at(std::size_t i, std::size_t j) const { return impl_->data[i * impl_->shape[1] + j]; }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool on) { impl_->requires_grad = on; }

  bool has_grad() const { return !impl_->grad.empty(); }
  /// Gradient values; zeros if nothing has been accumulated yet.
  std::span<const T> grad() const;
  /// Gradient buffer, allocated (zeroed) on first use.
  std::span<T> grad_buffer() const;
  void zero_grad() const;

  /// Deep copy of shape and values; the copy is a fresh leaf without gradient.
  Tensor clone() const;

  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }
  const std::shared_ptr<TensorStorage<T>>& storage() const { return impl_; }

 private:
  explicit Tensor(std::shared_ptr<TensorStorage<T>> impl) : impl_(std::move(impl)) {}

  std::shared_ptr<TensorStorage<T>> impl_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace erpcl
