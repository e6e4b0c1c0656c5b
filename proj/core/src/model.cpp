#include "selrcn/model.hpp"

#include "selrcn/errors.hpp"
#include "selrcn/ops.hpp"

namespace selrcn {

namespace {

SEResNet make_cnn(const ModelConfig& config, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {1}));
  return SEResNet(config.cnn, rng);
}

SELSTM make_lstm(const ModelConfig& config, std::uint64_t seed) {
  if (config.lstm.input_dim != config.cnn.feature_dim()) {
    throw InputError("SE-LSTM input width " + std::to_string(config.lstm.input_dim) +
                     " does not match CNN feature width " + std::to_string(config.cnn.feature_dim()));
  }
  Rng rng(derive_seed(seed, {2}));
  return SELSTM(config.lstm, rng);
}

}  // namespace

SELRCN::SELRCN(const ModelConfig& config, std::uint64_t seed)
    : config_(config), cnn_(make_cnn(config, seed)), lstm_(make_lstm(config, seed)) {}

Tensor SELRCN::features(Tape& tape, const Tensor& frames, std::size_t clips, bool training) {
  if (frames.rank() != 4 || clips == 0 || frames.dim(0) % clips != 0) {
    throw DimensionError("SE-LRCN expects [(B·T)×3×H×W] frames for " + std::to_string(clips) + " clips, got " +
                         shape_string(frames.shape()));
  }
  const std::size_t steps = frames.dim(0) / clips;
  const Tensor pooled = cnn_.forward(tape, frames, training);
  return ops::reshape(tape, pooled, Shape{clips, steps, pooled.dim(1)});
}

Tensor SELRCN::forward(Tape& tape, const Tensor& frames, std::size_t clips, bool training, Rng& rng) {
  const Tensor sequence = features(tape, frames, clips, training);
  const Tensor hidden = lstm_.encode(tape, sequence, training, rng);
  return lstm_.logits(tape, hidden, training, rng);
}

Tensor SELRCN::predict_frames(const Tensor& clip, Precision precision) {
  Tape tape(precision);
  tape.set_grad_enabled(false);
  Rng unused(0);
  const FeatureSequence sequence = extract_video_features(tape, clip, cnn_, false);
  const Tensor hidden = lstm_.encode(tape, sequence.values(), false, unused);
  return ops::softmax(tape, lstm_.logits(tape, hidden, false, unused), -1);
}

Tensor SELRCN::temporal_gates(const Tensor& clip, Precision precision) {
  if (!lstm_.se()) return {};
  Tape tape(precision);
  tape.set_grad_enabled(false);
  const FeatureSequence sequence = extract_video_features(tape, clip, cnn_, false);
  return lstm_.gates(tape, sequence.values());
}

NamedTensors SELRCN::parameters() const {
  NamedTensors out = cnn_.parameters("cnn");
  NamedTensors lstm = lstm_.parameters("lstm");
  out.insert(out.end(), lstm.begin(), lstm.end());
  return out;
}

NamedTensors SELRCN::buffers() const { return cnn_.buffers("cnn"); }

std::vector<Tensor> SELRCN::trainable() const {
  std::vector<Tensor> out;
  for (const NamedTensor& p : parameters()) out.push_back(p.tensor);
  return out;
}

}  // namespace selrcn
