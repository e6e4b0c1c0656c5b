#include "selrcn/tape.hpp"

#include "selrcn/errors.hpp"

namespace selrcn {

bool Tape::tracks(std::initializer_list<const Tensor*> inputs) const {
  if (!grad_enabled_) return false;
  for (const Tensor* t : inputs) {
    if (t && t->requires_grad()) return true;
  }
  return false;
}

bool Tape::tracks(std::span<const Tensor> inputs) const {
  if (!grad_enabled_) return false;
  for (const Tensor& t : inputs) {
    if (t.requires_grad()) return true;
  }
  return false;
}

Tensor Tape::record(Tensor output, std::vector<Tensor> inputs, BackwardFn backward) {
  round_in_place(precision_, output.mutable_data());
  if (!tracks(std::span<const Tensor>(inputs))) return output;
  output.set_requires_grad(true);
  nodes_.push_back(Node{std::move(inputs), output, std::move(backward)});
  return output;
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " +
                        (loss.defined() ? shape_string(loss.shape()) : std::string("<undefined>")));
  }
  if (!loss.requires_grad()) {
    throw ContractError("backward: loss does not depend on any tensor that requires a gradient");
  }

  for (Node& node : nodes_) node.output.clear_grad();
  Tensor seed = loss;
  seed.mutable_grad()[0] += 1.0;

  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node& node = *it;
    if (!node.output.has_grad()) continue;
    node.backward(node.output.grad());
    if (precision_ == Precision::f32) {
      for (Tensor& in : node.inputs) {
        if (in.has_grad()) round_in_place(precision_, in.mutable_grad());
      }
    }
  }
}

}  // namespace selrcn
