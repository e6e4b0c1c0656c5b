#include "selrcn/se_lstm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "selrcn/errors.hpp"
#include "selrcn/ops.hpp"

namespace selrcn {

namespace {

Tensor uniform_tensor(Shape shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.mutable_data()) v = rng.uniform(-bound, bound);
  return t;
}

// Gate nonlinearities and state update given the input projection of x_t.
// An undefined h_prev/c_prev stands for the zero initial state.
LSTMCellOutput cell_from_projection(Tape& tape, const Tensor& projected, const Tensor& h_prev, const Tensor& c_prev,
                                    const LSTMLayerParams& params) {
  const std::size_t h = params.hidden();
  const Tensor pre = h_prev.defined() ? ops::add(tape, projected, ops::linear(tape, h_prev, params.recurrent_weights))
                                      : projected;
  const Tensor i = ops::sigmoid(tape, ops::slice_cols(tape, pre, 0, h));
  const Tensor f = ops::sigmoid(tape, ops::slice_cols(tape, pre, h, 2 * h));
  const Tensor g = ops::tanh(tape, ops::slice_cols(tape, pre, 2 * h, 3 * h));
  const Tensor o = ops::sigmoid(tape, ops::slice_cols(tape, pre, 3 * h, 4 * h));
  const Tensor input_part = ops::mul(tape, i, g);
  const Tensor c = c_prev.defined() ? ops::add(tape, ops::mul(tape, f, c_prev), input_part) : input_part;
  const Tensor out = ops::mul(tape, o, ops::tanh(tape, c));
  return {out, c};
}

}  // namespace

LSTMLayerParams LSTMLayerParams::init(std::size_t input_dim, std::size_t hidden, Rng& rng) {
  LSTMLayerParams p;
  p.input_weights = uniform_tensor(Shape{4 * hidden, input_dim}, 1.0 / std::sqrt(static_cast<double>(input_dim)), rng);
  p.recurrent_weights = uniform_tensor(Shape{4 * hidden, hidden}, 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
  p.bias = Tensor(Shape{4 * hidden}, 0.0);
  auto b = p.bias.mutable_data();
  std::fill(b.begin() + static_cast<std::ptrdiff_t>(hidden), b.begin() + static_cast<std::ptrdiff_t>(2 * hidden), 1.0);
  return p;
}

LSTMCellOutput lstm_cell_step(Tape& tape, const Tensor& x, const Tensor& h_prev, const Tensor& c_prev,
                              const LSTMLayerParams& params) {
  const std::size_t hidden = params.hidden();
  const bool single = x.rank() == 1;
  const Tensor xs = single ? ops::reshape(tape, x, Shape{1, x.dim(0)}) : x;
  const Tensor hs = h_prev.rank() == 1 ? ops::reshape(tape, h_prev, Shape{1, h_prev.dim(0)}) : h_prev;
  const Tensor cs = c_prev.rank() == 1 ? ops::reshape(tape, c_prev, Shape{1, c_prev.dim(0)}) : c_prev;
  if (xs.dim(1) != params.input_dim() || hs.dim(1) != hidden || cs.shape() != hs.shape() ||
      hs.dim(0) != xs.dim(0)) {
    throw DimensionError("lstm_cell_step: x " + shape_string(x.shape()) + ", h " + shape_string(h_prev.shape()) +
                         ", c " + shape_string(c_prev.shape()) + " incompatible with layer [" +
                         std::to_string(params.input_dim()) + "→" + std::to_string(hidden) + "]");
  }
  const Tensor projected = ops::linear(tape, xs, params.input_weights, params.bias);
  LSTMCellOutput out = cell_from_projection(tape, projected, hs, cs, params);
  if (single) {
    out.h = ops::reshape(tape, out.h, Shape{hidden});
    out.c = ops::reshape(tape, out.c, Shape{hidden});
  }
  return out;
}

std::size_t SELSTMConfig::squeezed_dim() const {
  return se.squeeze_axis == SqueezeAxis::channel ? sequence_length : input_dim;
}

void SELSTMConfig::validate() const {
  if (layers == 0 || hidden == 0 || input_dim == 0 || sequence_length == 0) {
    throw InputError("SE-LSTM layers, hidden units, input width and sequence length must be positive");
  }
  if (class_count < 2) throw InputError("SE-LSTM needs at least two classes");
  if (dropout < 0.0 || dropout >= 1.0) throw InputError("dropout must be in [0,1)");
  se.validate();
  if (se_enabled && se.squeeze_axis == SqueezeAxis::spatial) {
    throw InputError("SE-LSTM squeezes over channels (per-frame) or time (per-channel), not space");
  }
}

SELSTM::SELSTM(SELSTMConfig config, Rng& rng) : config_(config) {
  config_.validate();
  if (config_.se_enabled) se_ = ExcitationWeights::init(config_.squeezed_dim(), config_.se, rng);
  std::size_t in = config_.input_dim;
  for (std::size_t l = 0; l < config_.layers; ++l) {
    layers_.push_back(LSTMLayerParams::init(in, config_.hidden, rng));
    in = config_.hidden;
  }
  head_weight_ =
      uniform_tensor(Shape{config_.class_count, config_.hidden}, 1.0 / std::sqrt(static_cast<double>(config_.hidden)), rng);
  head_bias_ = Tensor(Shape{config_.class_count}, 0.0);
}

Tensor SELSTM::gates(Tape& tape, const Tensor& sequence) const {
  if (!se_) throw ContractError("SE-LSTM gates requested with SE disabled");
  return excitation(tape, squeeze_sequence(tape, sequence, config_.se), *se_, config_.se);
}

Tensor SELSTM::encode(Tape& tape, const Tensor& sequence, bool training, Rng& rng) const {
  if (sequence.rank() != 2 && sequence.rank() != 3) {
    throw DimensionError("SE-LSTM expects [T×C] or [B×T×C], got " + shape_string(sequence.shape()));
  }
  const bool batched = sequence.rank() == 3;
  const std::size_t batch = batched ? sequence.dim(0) : 1;
  const std::size_t steps = sequence.dim(sequence.rank() - 2);
  const std::size_t channels = sequence.dim(sequence.rank() - 1);
  if (channels != config_.input_dim) {
    throw DimensionError("SE-LSTM expects " + std::to_string(config_.input_dim) + " feature channels, got " +
                         shape_string(sequence.shape()));
  }

  Tensor input = sequence;
  if (se_) input = reweight_sequence(tape, sequence, gates(tape, sequence), config_.se);

  // Rows ordered b·T + t.
  Tensor rows = ops::reshape(tape, input, Shape{batch * steps, channels});
  std::vector<std::vector<std::size_t>> step_rows(steps, std::vector<std::size_t>(batch));
  std::vector<std::size_t> to_batch_major(batch * steps);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t b = 0; b < batch; ++b) {
      step_rows[t][b] = b * steps + t;
      to_batch_major[b * steps + t] = t * batch + b;
    }
  }

  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const LSTMLayerParams& layer = layers_[l];
    const Tensor projected = ops::linear(tape, rows, layer.input_weights, layer.bias);
    std::vector<Tensor> outputs;
    outputs.reserve(steps);
    Tensor h, c;
    for (std::size_t t = 0; t < steps; ++t) {
      const LSTMCellOutput step = cell_from_projection(tape, ops::gather_rows(tape, projected, step_rows[t]), h, c, layer);
      h = step.h;
      c = step.c;
      outputs.push_back(h);
    }
    rows = ops::gather_rows(tape, ops::concat_rows(tape, outputs), to_batch_major);
    if (l + 1 < layers_.size()) rows = ops::dropout(tape, rows, config_.dropout, rng, training);
  }

  const std::size_t hidden = config_.hidden;
  return batched ? ops::reshape(tape, rows, Shape{batch, steps, hidden}) : rows;
}

Tensor SELSTM::logits(Tape& tape, const Tensor& hidden, bool training, Rng& rng) const {
  Tensor rows = hidden;
  if (hidden.rank() == 3) rows = ops::reshape(tape, hidden, Shape{hidden.dim(0) * hidden.dim(1), hidden.dim(2)});
  rows = ops::dropout(tape, rows, config_.dropout, rng, training);
  return ops::linear(tape, rows, head_weight_, head_bias_);
}

NamedTensors SELSTM::parameters(const std::string& prefix) const {
  NamedTensors out;
  if (se_) {
    out.push_back({prefix + ".se.reduce", se_->reduce});
    out.push_back({prefix + ".se.expand", se_->expand});
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const std::string name = prefix + ".layer" + std::to_string(l + 1);
    out.push_back({name + ".w_ih", layers_[l].input_weights});
    out.push_back({name + ".w_hh", layers_[l].recurrent_weights});
    out.push_back({name + ".bias", layers_[l].bias});
  }
  out.push_back({prefix + ".head.weight", head_weight_});
  out.push_back({prefix + ".head.bias", head_bias_});
  return out;
}

Tensor se_lstm_forward(Tape& tape, const FeatureSequence& sequence, const SELSTM& net, bool training, Rng& rng) {
  return net.encode(tape, sequence.values(), training, rng);
}

Tensor classify_frames(Tape& tape, const Tensor& hidden, const Tensor& weight, const Tensor& bias) {
  return ops::softmax(tape, ops::linear(tape, hidden, weight, bias), -1);
}

Tensor late_fuse(const Tensor& per_frame, FusionMode mode) {
  if (per_frame.rank() != 2) throw DimensionError("late_fuse: expected [T×K], got " + shape_string(per_frame.shape()));
  const std::size_t frames = per_frame.dim(0);
  const std::size_t classes = per_frame.dim(1);
  auto v = per_frame.data();
  Tensor fused(Shape{classes});
  auto out = fused.mutable_data();
  std::vector<double> column(frames);
  for (std::size_t k = 0; k < classes; ++k) {
    for (std::size_t t = 0; t < frames; ++t) column[t] = v[t * classes + k];
    if (mode == FusionMode::max) {
      out[k] = *std::max_element(column.begin(), column.end());
      continue;
    }
    // Sorting fixes the summation order; Neumaier compensation keeps it exact
    // to within one rounding.
    std::sort(column.begin(), column.end());
    double total = 0.0;
    double carry = 0.0;
    for (double x : column) {
      const double next = total + x;
      carry += std::abs(total) >= std::abs(x) ? (total - next) + x : (x - next) + total;
      total = next;
    }
    out[k] = (total + carry) / static_cast<double>(frames);
  }
  if (mode == FusionMode::max) {
    double total = 0.0;
    for (double x : out) total += x;
    for (double& x : out) x /= total;
  }
  return fused;
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw DimensionError("argmax of an empty range");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

PredictionResult make_prediction(const Tensor& per_frame, FusionMode mode) {
  PredictionResult result;
  result.per_frame = per_frame;
  result.fused = late_fuse(per_frame, mode);
  result.predicted_class = argmax(result.fused.data());
  return result;
}

}  // namespace selrcn
