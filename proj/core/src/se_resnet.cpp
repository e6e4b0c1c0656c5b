#include "selrcn/se_resnet.hpp"

#include <cmath>
#include <string>

#include "selrcn/errors.hpp"

namespace selrcn {

SEResNetConfig SEResNetConfig::resnet34() { return SEResNetConfig{}; }

SEResNetConfig SEResNetConfig::tiny() {
  SEResNetConfig c;
  c.stage_blocks = {1, 1, 1, 1};
  c.stage_channels = {8, 16, 32, 64};
  c.stem_kernel = 3;
  c.stem_stride = 1;
  c.stem_pool = false;
  c.input_size = 16;
  return c;
}

void SEResNetConfig::validate() const {
  for (std::size_t i = 0; i < 4; ++i) {
    if (stage_blocks[i] == 0 || stage_channels[i] == 0) {
      throw InputError("SE-ResNet stages need at least one block and one channel");
    }
  }
  if (in_channels == 0 || stem_kernel == 0 || stem_stride == 0) throw InputError("invalid SE-ResNet stem");
  se.validate();
  if (se.squeeze_axis != SqueezeAxis::spatial) throw InputError("SE-ResNet uses a spatial squeeze");
}

BatchNormParams BatchNormParams::init(std::size_t channels) {
  return BatchNormParams{Tensor(Shape{channels}, 1.0), Tensor(Shape{channels}, 0.0), Tensor(Shape{channels}, 0.0),
                         Tensor(Shape{channels}, 1.0)};
}

namespace {

// He initialization: N(0, 2/fan_in).
Tensor conv_weight(std::size_t out, std::size_t in, std::size_t k, Rng& rng) {
  Tensor w(Shape{out, in, k, k});
  const double stddev = std::sqrt(2.0 / static_cast<double>(in * k * k));
  for (double& v : w.mutable_data()) v = rng.normal(0.0, stddev);
  return w;
}

ConvBN make_conv_bn(std::size_t out, std::size_t in, std::size_t k, Rng& rng) {
  return ConvBN{conv_weight(out, in, k, rng), BatchNormParams::init(out)};
}

Tensor conv_bn(Tape& tape, const Tensor& x, ConvBN& layer, std::size_t stride, bool training) {
  const std::size_t k = layer.weight.dim(2);
  const Tensor y = ops::conv2d(tape, x, layer.weight, stride, k / 2);
  ops::BatchNormOptions options;
  options.training = training;
  return ops::batch_norm2d(tape, y, layer.bn.gamma, layer.bn.beta, layer.bn.running_mean, layer.bn.running_var,
                           options);
}

void append_conv_bn(NamedTensors& out, const std::string& name, const ConvBN& layer) {
  out.push_back({name + ".weight", layer.weight});
  out.push_back({name + ".bn.gamma", layer.bn.gamma});
  out.push_back({name + ".bn.beta", layer.bn.beta});
}

void append_bn_buffers(NamedTensors& out, const std::string& name, const ConvBN& layer) {
  out.push_back({name + ".bn.running_mean", layer.bn.running_mean});
  out.push_back({name + ".bn.running_var", layer.bn.running_var});
}

std::string block_name(const std::string& prefix, std::size_t stage, std::size_t block) {
  return prefix + ".stage" + std::to_string(stage + 1) + ".block" + std::to_string(block + 1);
}

}  // namespace

Tensor basic_block_forward(Tape& tape, const Tensor& x, BlockParams& block, const SEConfig& se_config,
                           bool training) {
  Tensor branch = ops::relu(tape, conv_bn(tape, x, block.conv1, block.stride, training));
  branch = conv_bn(tape, branch, block.conv2, 1, training);
  const Tensor shortcut = block.projection ? conv_bn(tape, x, *block.projection, block.stride, training) : x;
  if (shortcut.shape() != branch.shape()) {
    throw DimensionError("basic block: shortcut " + shape_string(shortcut.shape()) + " does not match branch " +
                         shape_string(branch.shape()));
  }
  Tensor sum;
  if (block.se) {
    const Tensor gates = excitation(tape, squeeze_spatial(tape, branch), *block.se, se_config);
    sum = reweight_residual(tape, shortcut, branch, gates);
  } else {
    sum = ops::add(tape, shortcut, branch);
  }
  return ops::relu(tape, sum);
}

SEResNet::SEResNet(SEResNetConfig config, Rng& rng) : config_(config) {
  config_.validate();
  stem_ = make_conv_bn(config_.stage_channels[0], config_.in_channels, config_.stem_kernel, rng);
  std::size_t in = config_.stage_channels[0];
  for (std::size_t s = 0; s < 4; ++s) {
    const std::size_t out = config_.stage_channels[s];
    for (std::size_t b = 0; b < config_.stage_blocks[s]; ++b) {
      BlockParams block;
      block.stride = (s > 0 && b == 0) ? 2 : 1;
      block.conv1 = make_conv_bn(out, in, 3, rng);
      block.conv2 = make_conv_bn(out, out, 3, rng);
      if (block.stride != 1 || in != out) block.projection = make_conv_bn(out, in, 1, rng);
      blocks_.push_back(std::move(block));
      in = out;
    }
  }
  if (config_.se_enabled) {
    blocks_.back().se = ExcitationWeights::init(config_.feature_dim(), config_.se, rng);
  }
}

Tensor SEResNet::forward_maps(Tape& tape, const Tensor& frames, bool training) {
  if (frames.rank() != 4 || frames.dim(1) != config_.in_channels) {
    throw DimensionError("SE-ResNet expects frames [N×" + std::to_string(config_.in_channels) + "×H×W], got " +
                         shape_string(frames.shape()));
  }
  Tensor x = ops::relu(tape, conv_bn(tape, frames, stem_, config_.stem_stride, training));
  if (config_.stem_pool) x = ops::max_pool2d(tape, x, 3, 2, 1);
  for (BlockParams& block : blocks_) x = basic_block_forward(tape, x, block, config_.se, training);
  return x;
}

Tensor SEResNet::forward(Tape& tape, const Tensor& frames, bool training) {
  return ops::global_avg_pool(tape, forward_maps(tape, frames, training));
}

NamedTensors SEResNet::parameters(const std::string& prefix) const {
  NamedTensors out;
  append_conv_bn(out, prefix + ".stem", stem_);
  std::size_t index = 0;
  for (std::size_t s = 0; s < 4; ++s) {
    for (std::size_t b = 0; b < config_.stage_blocks[s]; ++b, ++index) {
      const BlockParams& block = blocks_[index];
      const std::string name = block_name(prefix, s, b);
      append_conv_bn(out, name + ".conv1", block.conv1);
      append_conv_bn(out, name + ".conv2", block.conv2);
      if (block.projection) append_conv_bn(out, name + ".proj", *block.projection);
      if (block.se) {
        out.push_back({name + ".se.reduce", block.se->reduce});
        out.push_back({name + ".se.expand", block.se->expand});
      }
    }
  }
  return out;
}

NamedTensors SEResNet::buffers(const std::string& prefix) const {
  NamedTensors out;
  append_bn_buffers(out, prefix + ".stem", stem_);
  std::size_t index = 0;
  for (std::size_t s = 0; s < 4; ++s) {
    for (std::size_t b = 0; b < config_.stage_blocks[s]; ++b, ++index) {
      const BlockParams& block = blocks_[index];
      const std::string name = block_name(prefix, s, b);
      append_bn_buffers(out, name + ".conv1", block.conv1);
      append_bn_buffers(out, name + ".conv2", block.conv2);
      if (block.projection) append_bn_buffers(out, name + ".proj", *block.projection);
    }
  }
  return out;
}

std::size_t SEResNet::conv_parameter_count() const {
  std::size_t total = stem_.weight.numel();
  for (const BlockParams& block : blocks_) {
    total += block.conv1.weight.numel() + block.conv2.weight.numel();
    if (block.projection) total += block.projection->weight.numel();
  }
  return total;
}

Tensor se_resnet_forward(Tape& tape, const Tensor& frame, SEResNet& net) {
  if (frame.rank() != 3) {
    throw DimensionError("se_resnet_forward: expected one frame [3×H×W], got " + shape_string(frame.shape()));
  }
  const Tensor batch = ops::reshape(tape, frame, Shape{1, frame.dim(0), frame.dim(1), frame.dim(2)});
  const Tensor pooled = net.forward(tape, batch, false);
  return ops::reshape(tape, pooled, Shape{pooled.dim(1)});
}

FeatureSequence extract_video_features(Tape& tape, const Tensor& frames, SEResNet& net, bool training) {
  if (frames.rank() != 4) {
    throw DimensionError("extract_video_features: expected [T×3×H×W], got " + shape_string(frames.shape()));
  }
  if (training) return FeatureSequence(net.forward(tape, frames, true));

  const std::size_t t_count = frames.dim(0);
  std::vector<Tensor> rows;
  rows.reserve(t_count);
  for (std::size_t t = 0; t < t_count; ++t) {
    const std::size_t index[] = {t};
    rows.push_back(net.forward(tape, ops::gather_rows(tape, frames, index), false));
  }
  return FeatureSequence(ops::concat_rows(tape, rows));
}

}  // namespace selrcn
