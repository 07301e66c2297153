#include "erpcl/autodiff/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>

#include "erpcl/error.hpp"

namespace erpcl {

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

template <class T>
Tensor<T>::Tensor() : impl_(std::make_shared<TensorStorage<T>>()) {
  impl_->data.assign(1, T(0));
}

template <class T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T(0), requires_grad);
}

template <class T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  auto impl = std::make_shared<TensorStorage<T>>();
  impl->data.assign(shape_numel(shape), value);
  impl->shape = std::move(shape);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

template <class T>
Tensor<T> Tensor<T>::from(Shape shape, std::vector<T> data, bool requires_grad) {
  if (shape_numel(shape) != data.size()) {
    throw ShapeError("tensor shape " + shape_str(shape) + " does not hold " +
                     std::to_string(data.size()) + " values");
  }
  auto impl = std::make_shared<TensorStorage<T>>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

template <class T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return from({}, {value}, requires_grad);
}

template <class T>
std::size_t Tensor<T>::dim(std::size_t axis) const {
  if (axis >= impl_->shape.size()) {
    throw RankError("axis " + std::to_string(axis) + " out of range for shape " + shape_str(impl_->shape));
  }
  return impl_->shape[axis];
}

template <class T>
T Tensor<T>::item() const {
  if (impl_->data.size() != 1) {
    throw RankError("item() on tensor of shape " + shape_str(impl_->shape));
  }
  return impl_->data[0];
}

template <class T>
std::span<const T> Tensor<T>::grad() const {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), T(0));
  return impl_->grad;
}

template <class T>
std::span<T> Tensor<T>::grad_buffer() const {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), T(0));
  return impl_->grad;
}

template <class T>
void Tensor<T>::zero_grad() const {
  std::fill(impl_->grad.begin(), impl_->grad.end(), T(0));
}

template <class T>
Tensor<T> Tensor<T>::clone() const {
  return from(impl_->shape, impl_->data, false);
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace erpcl
