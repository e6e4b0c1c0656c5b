#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "selrcn/rng.hpp"
#include "selrcn/se.hpp"
#include "selrcn/tape.hpp"
#include "selrcn/tensor.hpp"

namespace selrcn {

/// Gate blocks are stacked in the order input, forget, cell, output.
struct LSTMLayerParams {
  Tensor input_weights;      // [4H×D]
  Tensor recurrent_weights;  // [4H×H]
  Tensor bias;               // [4H]

  std::size_t hidden() const { return recurrent_weights.dim(1); }
  std::size_t input_dim() const { return input_weights.dim(1); }

  /// Uniform ±1/√fan_in weights, zero bias except the forget block at 1.
  static LSTMLayerParams init(std::size_t input_dim, std::size_t hidden, Rng& rng);
};

struct LSTMCellOutput {
  Tensor h;
  Tensor c;
};

/// One step of the classic LSTM (no peepholes):
///   i,f,o = σ(·), g = tanh(·), c = f⊙c_prev + i⊙g, h = o⊙tanh(c).
/// x is [B×D] (or [D]), h_prev and c_prev are [B×H] (or [H]).
LSTMCellOutput lstm_cell_step(Tape& tape, const Tensor& x, const Tensor& h_prev, const Tensor& c_prev,
                              const LSTMLayerParams& params);

struct SELSTMConfig {
  std::size_t layers = 3;
  std::size_t hidden = 1024;
  /// Feature channels C of the incoming sequence.
  std::size_t input_dim = 512;
  /// Frames T per clip; sizes the per-frame excitation.
  std::size_t sequence_length = 30;
  std::size_t class_count = 101;
  double dropout = 0.5;
  bool se_enabled = true;
  SEConfig se{16, SqueezeAxis::channel, ReweightMode::residual};

  /// Length of the squeezed descriptor fed to the excitation.
  std::size_t squeezed_dim() const;
  void validate() const;
};

/// Stacked LSTM preceded by sequence-level squeeze-and-excitation, followed
/// by a per-frame linear classifier.
class SELSTM {
 public:
  SELSTM(SELSTMConfig config, Rng& rng);

  const SELSTMConfig& config() const { return config_; }

  /// Excitation gates for a sequence [T×C] → [d] or batch [B×T×C] → [B×d].
  Tensor gates(Tape& tape, const Tensor& sequence) const;

  /// Applies SE (if enabled) and runs all layers from zero state.
  /// [T×C] → [T×H] or [B×T×C] → [B×T×H].
  Tensor encode(Tape& tape, const Tensor& sequence, bool training, Rng& rng) const;

  /// Frame logits from hidden states: [T×H] → [T×K], [B×T×H] → [(B·T)×K].
  Tensor logits(Tape& tape, const Tensor& hidden, bool training, Rng& rng) const;

  std::vector<LSTMLayerParams>& layers() { return layers_; }
  const std::vector<LSTMLayerParams>& layers() const { return layers_; }
  std::optional<ExcitationWeights>& se() { return se_; }
  Tensor& head_weight() { return head_weight_; }
  Tensor& head_bias() { return head_bias_; }

  NamedTensors parameters(const std::string& prefix = "lstm") const;

 private:
  SELSTMConfig config_;
  std::optional<ExcitationWeights> se_;
  std::vector<LSTMLayerParams> layers_;
  Tensor head_weight_;  // [K×H]
  Tensor head_bias_;    // [K]
};

/// Ũ [T×C] → top-layer hidden states [T×H].
Tensor se_lstm_forward(Tape& tape, const FeatureSequence& sequence, const SELSTM& net, bool training, Rng& rng);

/// Row t = softmax(W·h_t + b). hidden [T×H], weight [K×H], bias [K].
Tensor classify_frames(Tape& tape, const Tensor& hidden, const Tensor& weight, const Tensor& bias);

enum class FusionMode { mean, max };

/// Fuses per-frame distributions [T×K] into one distribution [K].
/// mean: columnwise mean, summed in sorted order so the result does not
/// depend on frame order. max: columnwise max renormalized to sum 1.
Tensor late_fuse(const Tensor& per_frame, FusionMode mode = FusionMode::mean);

/// Index of the largest value; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

struct PredictionResult {
  Tensor per_frame;  // [T×K]
  Tensor fused;      // [K]
  std::size_t predicted_class = 0;
};

PredictionResult make_prediction(const Tensor& per_frame, FusionMode mode = FusionMode::mean);

}  // namespace selrcn
