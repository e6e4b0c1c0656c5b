#pragma once

#include <cstddef>

#include "selrcn/rng.hpp"
#include "selrcn/tape.hpp"
#include "selrcn/tensor.hpp"

namespace selrcn {

/// Axis that the squeeze averages over.
///   spatial: H×W plane of a feature map → one value per channel.
///   channel: channels of a feature sequence → one value per frame.
///   time:    frames of a feature sequence → one value per channel.
enum class SqueezeAxis { spatial, channel, time };

/// How excitation weights are applied.
///   scale_only: out = s·u
///   residual:   out = shortcut + s·u (for sequences the shortcut is u itself)
enum class ReweightMode { scale_only, residual };

struct SEConfig {
  std::size_t reduction_ratio = 16;
  SqueezeAxis squeeze_axis = SqueezeAxis::spatial;
  ReweightMode reweight_mode = ReweightMode::residual;

  /// Bottleneck width for a squeezed vector of length d: max(1, ⌊d/r⌋).
  std::size_t hidden_dim(std::size_t d) const;
  void validate() const;
};

/// Bias-free two-layer gating network: reduce [hidden×d], expand [d×hidden].
struct ExcitationWeights {
  Tensor reduce;
  Tensor expand;

  std::size_t input_dim() const { return reduce.dim(1); }

  /// Uniform ±1/√fan_in initialization.
  static ExcitationWeights init(std::size_t d, const SEConfig& config, Rng& rng);
};

/// Per-frame pooled CNN features of one clip, [T×C].
class FeatureSequence {
 public:
  explicit FeatureSequence(Tensor values);

  const Tensor& values() const { return values_; }
  std::size_t frames() const { return values_.dim(0); }
  std::size_t channels() const { return values_.dim(1); }

 private:
  Tensor values_;
};

/// Mean over each H×W plane: [C×H×W] → [C] or [N×C×H×W] → [N×C].
Tensor squeeze_spatial(Tape& tape, const Tensor& u);

/// s = σ(expand · relu(reduce · z)) for z of shape [d] or a batch [N×d].
Tensor excitation(Tape& tape, const Tensor& z, const ExcitationWeights& weights, const SEConfig& config);

/// ũ_c = u_prev_c + s_c·u_cur_c for maps [C×H×W] with s[C], or batched
/// [N×C×H×W] with s[N×C].
Tensor reweight_residual(Tape& tape, const Tensor& u_prev, const Tensor& u_cur, const Tensor& s);

/// Frame descriptor z_t = mean_c U[t,c]. Accepts [T×C] → [T] or [B×T×C] → [B×T].
Tensor squeeze_frames(Tape& tape, const Tensor& sequence);
Tensor squeeze_frames(Tape& tape, const FeatureSequence& sequence);

/// Channel descriptor z̃_c = mean_t U[t,c]. Accepts [T×C] → [C] or [B×T×C] → [B×C].
Tensor squeeze_channels(Tape& tape, const Tensor& sequence);
Tensor squeeze_channels(Tape& tape, const FeatureSequence& sequence);

/// Squeeze selected by config.squeeze_axis (channel → per frame, time → per channel).
Tensor squeeze_sequence(Tape& tape, const Tensor& sequence, const SEConfig& config);

/// Applies sequence gates. With squeeze_axis=channel, s holds one gate per
/// frame and scales rows; with squeeze_axis=time, one gate per channel and
/// scales columns. Batched inputs [B×T×C] take s of shape [B×T] or [B×C].
Tensor reweight_sequence(Tape& tape, const Tensor& sequence, const Tensor& s, const SEConfig& config);
FeatureSequence reweight_sequence(Tape& tape, const FeatureSequence& sequence, const Tensor& s,
                                  const SEConfig& config);

}  // namespace selrcn
