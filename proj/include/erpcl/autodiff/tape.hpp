#pragma once

#include <functional>
#include <vector>

#include "erpcl/autodiff/tensor.hpp"

namespace erpcl {

/// Ordered record of executed operations for one forward pass.
///
/// Ops append a node only when at least one input requires a gradient, so
/// inference on frozen parameters leaves the tape empty. A tape is owned by one
/// thread; independent tapes can run concurrently.
template <class T>
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  void record(Tensor<T> output, BackwardFn backward);

  /// Propagates d(loss)/d(.) to every requires_grad leaf reachable on this tape.
  /// Intermediate gradients are reset on each call; leaf gradients accumulate.
  void backward(const Tensor<T>& loss);

  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  void clear() { nodes_.clear(); }

 private:
  struct Node {
    Tensor<T> output;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

template <class T>
void backward(const Tensor<T>& loss, Tape<T>& tape) {
  tape.backward(loss);
}

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace erpcl
