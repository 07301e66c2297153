#include "erpcl/autodiff/tape.hpp"

#include <algorithm>

#include "erpcl/error.hpp"

namespace erpcl {

template <class T>
void Tape<T>::record(Tensor<T> output, BackwardFn backward) {
  nodes_.push_back(Node{std::move(output), std::move(backward)});
}

template <class T>
void Tape<T>::backward(const Tensor<T>& loss) {
  if (loss.numel() != 1) {
    throw RankError("backward() needs a scalar loss, got shape " + shape_str(loss.shape()));
  }
  const auto it = std::find_if(nodes_.begin(), nodes_.end(),
                               [&](const Node& n) { return n.output.same_storage(loss); });
  if (it == nodes_.end()) {
    throw Error("backward(): loss was not produced on this tape");
  }
  for (auto& node : nodes_) {
    auto g = node.output.grad_buffer();
    std::fill(g.begin(), g.end(), T(0));
  }
  Tensor<T> seed = loss;
  seed.grad_buffer()[0] = T(1);
  // Nodes after the loss cannot contribute to it.
  for (auto rit = std::make_reverse_iterator(it + 1); rit != nodes_.rend(); ++rit) {
    rit->backward();
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace erpcl
