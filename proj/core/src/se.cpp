#include "selrcn/se.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "selrcn/errors.hpp"
#include "selrcn/ops.hpp"

namespace selrcn {

std::size_t SEConfig::hidden_dim(std::size_t d) const {
  validate();
  return std::max<std::size_t>(1, d / reduction_ratio);
}

void SEConfig::validate() const {
  if (reduction_ratio < 1) throw InputError("SE reduction ratio must be at least 1");
}

ExcitationWeights ExcitationWeights::init(std::size_t d, const SEConfig& config, Rng& rng) {
  const std::size_t hidden = config.hidden_dim(d);
  ExcitationWeights w{Tensor(Shape{hidden, d}), Tensor(Shape{d, hidden})};
  const double reduce_bound = 1.0 / std::sqrt(static_cast<double>(d));
  const double expand_bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (double& v : w.reduce.mutable_data()) v = rng.uniform(-reduce_bound, reduce_bound);
  for (double& v : w.expand.mutable_data()) v = rng.uniform(-expand_bound, expand_bound);
  return w;
}

FeatureSequence::FeatureSequence(Tensor values) : values_(std::move(values)) {
  if (!values_.defined() || values_.rank() != 2) {
    throw DimensionError("feature sequence must be [T×C], got " +
                         (values_.defined() ? shape_string(values_.shape()) : std::string("<undefined>")));
  }
}

Tensor squeeze_spatial(Tape& tape, const Tensor& u) {
  if (u.rank() == 3) return ops::mean_axes(tape, u, 1, 3);
  if (u.rank() == 4) return ops::mean_axes(tape, u, 2, 4);
  throw DimensionError("squeeze_spatial: expected [C×H×W] or [N×C×H×W], got " + shape_string(u.shape()));
}

Tensor excitation(Tape& tape, const Tensor& z, const ExcitationWeights& weights, const SEConfig& config) {
  if (z.rank() != 1 && z.rank() != 2) {
    throw DimensionError("excitation: expected [d] or [N×d], got " + shape_string(z.shape()));
  }
  const std::size_t d = z.shape().back();
  const std::size_t hidden = config.hidden_dim(d);
  if (weights.reduce.shape() != Shape{hidden, d} || weights.expand.shape() != Shape{d, hidden}) {
    throw DimensionError("excitation: weights " + shape_string(weights.reduce.shape()) + "/" +
                         shape_string(weights.expand.shape()) + " do not match d=" + std::to_string(d) +
                         ", hidden=" + std::to_string(hidden));
  }
  const Tensor rows = z.rank() == 1 ? ops::reshape(tape, z, Shape{1, d}) : z;
  const Tensor hidden_act = ops::relu(tape, ops::linear(tape, rows, weights.reduce));
  const Tensor gates = ops::sigmoid(tape, ops::linear(tape, hidden_act, weights.expand));
  return z.rank() == 1 ? ops::reshape(tape, gates, Shape{d}) : gates;
}

Tensor reweight_residual(Tape& tape, const Tensor& u_prev, const Tensor& u_cur, const Tensor& s) {
  if (u_prev.shape() != u_cur.shape()) {
    throw DimensionError("reweight_residual: shortcut " + shape_string(u_prev.shape()) + " vs branch " +
                         shape_string(u_cur.shape()));
  }
  if (u_cur.rank() == 3) return ops::add(tape, u_prev, ops::scale_broadcast(tape, u_cur, s, 1, 3));
  if (u_cur.rank() == 4) return ops::add(tape, u_prev, ops::scale_broadcast(tape, u_cur, s, 2, 4));
  throw DimensionError("reweight_residual: expected rank 3 or 4 maps, got " + shape_string(u_cur.shape()));
}

namespace {

void require_sequence(const char* op, const Tensor& u) {
  if (u.rank() != 2 && u.rank() != 3) {
    throw DimensionError(std::string(op) + ": expected [T×C] or [B×T×C], got " + shape_string(u.shape()));
  }
}

}  // namespace

Tensor squeeze_frames(Tape& tape, const Tensor& sequence) {
  require_sequence("squeeze_frames", sequence);
  const std::size_t last = sequence.rank() - 1;
  return ops::mean_axes(tape, sequence, last, last + 1);
}

Tensor squeeze_frames(Tape& tape, const FeatureSequence& sequence) { return squeeze_frames(tape, sequence.values()); }

Tensor squeeze_channels(Tape& tape, const Tensor& sequence) {
  require_sequence("squeeze_channels", sequence);
  const std::size_t time_axis = sequence.rank() - 2;
  return ops::mean_axes(tape, sequence, time_axis, time_axis + 1);
}

Tensor squeeze_channels(Tape& tape, const FeatureSequence& sequence) {
  return squeeze_channels(tape, sequence.values());
}

Tensor squeeze_sequence(Tape& tape, const Tensor& sequence, const SEConfig& config) {
  switch (config.squeeze_axis) {
    case SqueezeAxis::channel:
      return squeeze_frames(tape, sequence);
    case SqueezeAxis::time:
      return squeeze_channels(tape, sequence);
    case SqueezeAxis::spatial:
      break;
  }
  throw InputError("squeeze_sequence: spatial squeeze does not apply to feature sequences");
}

Tensor reweight_sequence(Tape& tape, const Tensor& sequence, const Tensor& s, const SEConfig& config) {
  require_sequence("reweight_sequence", sequence);
  const std::size_t rank = sequence.rank();
  const std::size_t frames = sequence.dim(rank - 2);
  const std::size_t channels = sequence.dim(rank - 1);
  const std::size_t gate_len = s.shape().back();

  std::size_t begin = 0;
  if (config.squeeze_axis == SqueezeAxis::channel && gate_len == frames) {
    begin = rank - 1;  // broadcast over channels
  } else if (config.squeeze_axis == SqueezeAxis::time && gate_len == channels) {
    begin = rank - 2;  // broadcast over frames
  } else if (config.squeeze_axis == SqueezeAxis::spatial) {
    throw InputError("reweight_sequence: spatial squeeze does not apply to feature sequences");
  } else {
    throw DimensionError("reweight_sequence: gate length " + std::to_string(gate_len) +
                         " matches neither the expected axis of sequence " + shape_string(sequence.shape()));
  }
  const Tensor scaled = ops::scale_broadcast(tape, sequence, s, begin, begin + 1);
  if (config.reweight_mode == ReweightMode::scale_only) return scaled;
  return ops::add(tape, sequence, scaled);
}

FeatureSequence reweight_sequence(Tape& tape, const FeatureSequence& sequence, const Tensor& s,
                                  const SEConfig& config) {
  return FeatureSequence(reweight_sequence(tape, sequence.values(), s, config));
}

}  // namespace selrcn
