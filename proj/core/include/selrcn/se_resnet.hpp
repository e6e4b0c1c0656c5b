#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "selrcn/ops.hpp"
#include "selrcn/rng.hpp"
#include "selrcn/se.hpp"
#include "selrcn/tape.hpp"
#include "selrcn/tensor.hpp"

namespace selrcn {

struct SEResNetConfig {
  std::array<std::size_t, 4> stage_blocks{3, 4, 6, 3};
  std::array<std::size_t, 4> stage_channels{64, 128, 256, 512};
  std::size_t in_channels = 3;
  std::size_t stem_kernel = 7;
  std::size_t stem_stride = 2;
  /// 3×3 stride-2 max pooling after the stem.
  bool stem_pool = true;
  bool se_enabled = true;
  SEConfig se{16, SqueezeAxis::spatial, ReweightMode::residual};
  std::size_t input_size = 224;

  /// Standard ResNet-34 layout.
  static SEResNetConfig resnet34();
  /// Desk-scale layout for 16×16 inputs: one block per stage, 3×3 stem, no pooling.
  static SEResNetConfig tiny();

  std::size_t feature_dim() const { return stage_channels[3]; }
  void validate() const;
};

struct BatchNormParams {
  Tensor gamma;
  Tensor beta;
  Tensor running_mean;
  Tensor running_var;

  static BatchNormParams init(std::size_t channels);
};

struct ConvBN {
  Tensor weight;
  BatchNormParams bn;
};

struct BlockParams {
  ConvBN conv1;
  ConvBN conv2;
  /// 1×1 shortcut projection; present iff stride ≠ 1 or channel count changes.
  std::optional<ConvBN> projection;
  std::size_t stride = 1;
  std::optional<ExcitationWeights> se;
};

/// relu(shortcut(x) + branch(x)), where branch is conv3×3→BN→relu→conv3×3→BN.
/// With SE weights the branch is rescaled channelwise by its own excitation
/// gates before the addition.
Tensor basic_block_forward(Tape& tape, const Tensor& x, BlockParams& block, const SEConfig& se_config,
                           bool training);

class SEResNet {
 public:
  SEResNet(SEResNetConfig config, Rng& rng);

  const SEResNetConfig& config() const { return config_; }

  /// Final feature maps before pooling, [N×C_last×h×w].
  Tensor forward_maps(Tape& tape, const Tensor& frames, bool training);
  /// Pooled per-frame features, [N×C_last].
  Tensor forward(Tape& tape, const Tensor& frames, bool training);

  std::vector<BlockParams>& blocks() { return blocks_; }
  const std::vector<BlockParams>& blocks() const { return blocks_; }
  ConvBN& stem() { return stem_; }

  /// Learnable tensors with stable dotted names.
  NamedTensors parameters(const std::string& prefix = "cnn") const;
  /// Batch-norm running statistics.
  NamedTensors buffers(const std::string& prefix = "cnn") const;

  /// Number of convolution weights (stem, block and projection kernels).
  std::size_t conv_parameter_count() const;

 private:
  SEResNetConfig config_;
  ConvBN stem_;
  std::vector<BlockParams> blocks_;
};

/// One frame [3×H×W] → feature vector [C_last] (evaluation-mode normalization).
Tensor se_resnet_forward(Tape& tape, const Tensor& frame, SEResNet& net);

/// Frames [T×3×H×W] → Ũ [T×C_last]. In evaluation mode frames are processed
/// one at a time to bound memory; in training mode as one batch.
FeatureSequence extract_video_features(Tape& tape, const Tensor& frames, SEResNet& net, bool training = false);

}  // namespace selrcn
