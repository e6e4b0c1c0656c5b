#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "selrcn/rng.hpp"
#include "selrcn/se_lstm.hpp"
#include "selrcn/se_resnet.hpp"
#include "selrcn/tape.hpp"

namespace selrcn {

struct ModelConfig {
  SEResNetConfig cnn;
  SELSTMConfig lstm;
};

/// SE-ResNet feature extractor followed by the SE-LSTM classifier.
class SELRCN {
 public:
  SELRCN(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  SEResNet& cnn() { return cnn_; }
  const SEResNet& cnn() const { return cnn_; }
  SELSTM& lstm() { return lstm_; }
  const SELSTM& lstm() const { return lstm_; }

  /// Ũ for a batch of clips. frames is [(B·T)×3×H×W] in clip-major order;
  /// returns [B×T×C].
  Tensor features(Tape& tape, const Tensor& frames, std::size_t clips, bool training);

  /// Frame logits [(B·T)×K] for a batch of clips.
  Tensor forward(Tape& tape, const Tensor& frames, std::size_t clips, bool training, Rng& rng);

  /// Per-frame class distributions for one clip [T×3×H×W] in evaluation mode.
  Tensor predict_frames(const Tensor& clip, Precision precision = Precision::f32);

  /// Temporal excitation weights of the SE-LSTM for one clip, or an
  /// undefined tensor when its SE block is disabled.
  Tensor temporal_gates(const Tensor& clip, Precision precision = Precision::f32);

  /// Trainable tensors in a fixed order.
  NamedTensors parameters() const;
  /// Non-trainable state (normalization running statistics).
  NamedTensors buffers() const;
  std::vector<Tensor> trainable() const;

 private:
  ModelConfig config_;
  SEResNet cnn_;
  SELSTM lstm_;
};

}  // namespace selrcn
