#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "selrcn/tensor.hpp"

namespace selrcn {

/// Records differentiable operations in execution order and replays their
/// gradient rules in reverse.
///
/// A tape and the tensors it records are confined to one thread. Ops record a
/// node only when at least one input requires a gradient and recording is
/// enabled; otherwise they run as plain functions.
class Tape {
 public:
  /// Receives the output gradient and accumulates into the inputs it captured.
  using BackwardFn = std::function<void(std::span<const double> grad_output)>;

  explicit Tape(Precision precision = Precision::f32) : precision_(precision) {}

  Precision precision() const { return precision_; }

  bool grad_enabled() const { return grad_enabled_; }
  void set_grad_enabled(bool on) { grad_enabled_ = on; }

  /// True when an op over these inputs would be recorded.
  bool tracks(std::initializer_list<const Tensor*> inputs) const;
  bool tracks(std::span<const Tensor> inputs) const;

  /// Finalizes an op output: rounds it to the tape precision and, if any input
  /// requires a gradient, marks it as requiring one and appends the node.
  Tensor record(Tensor output, std::vector<Tensor> inputs, BackwardFn backward);

  /// Populates grad on every tensor reachable from `loss` that requires one.
  /// Gradients of leaves accumulate across calls; intermediate gradients are
  /// reset at the start of each call, so repeated calls are deterministic.
  void backward(const Tensor& loss);

  /// Branch tracking for piecewise-linear ops. While on, ops such as relu and
  /// max pooling fold the branch taken at every element into
  /// branch_signature(); two evaluations with equal signatures lie on the
  /// same linear piece.
  void set_track_branches(bool on) { track_branches_ = on; }
  bool tracks_branches() const { return track_branches_; }
  void mix_branch(std::uint64_t value) { branch_signature_ = (branch_signature_ ^ value) * 0x100000001b3ULL; }
  std::uint64_t branch_signature() const { return branch_signature_; }

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  struct Node {
    std::vector<Tensor> inputs;
    Tensor output;
    BackwardFn backward;
  };

  Precision precision_;
  bool grad_enabled_ = true;
  bool track_branches_ = false;
  std::uint64_t branch_signature_ = 0xcbf29ce484222325ULL;
  std::vector<Node> nodes_;
};

/// RAII switch that disables recording for its lifetime.
class NoGradGuard {
 public:
  explicit NoGradGuard(Tape& tape) : tape_(tape), previous_(tape.grad_enabled()) { tape.set_grad_enabled(false); }
  ~NoGradGuard() { tape_.set_grad_enabled(previous_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  Tape& tape_;
  bool previous_;
};

}  // namespace selrcn
