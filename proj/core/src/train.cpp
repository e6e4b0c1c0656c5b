#include "selrcn/train.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <utility>

#include "selrcn/errors.hpp"
#include "selrcn/ops.hpp"
#include "selrcn/tape.hpp"

namespace selrcn {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct SegmentRef {
  std::size_t video = 0;
  std::size_t index = 0;
  std::size_t start = 0;
};

Tensor gather_frames(const Tensor& frames, std::span<const std::size_t> indices) {
  Shape shape = frames.shape();
  const std::size_t frame_size = shape_numel(shape) / shape[0];
  shape[0] = indices.size();
  std::vector<double> out;
  out.reserve(indices.size() * frame_size);
  const auto src = frames.data();
  for (std::size_t i : indices) {
    out.insert(out.end(), src.begin() + static_cast<std::ptrdiff_t>(i * frame_size),
               src.begin() + static_cast<std::ptrdiff_t>((i + 1) * frame_size));
  }
  return Tensor(std::move(shape), std::move(out));
}

Tensor stack_clips(std::span<const Tensor> clips) {
  Shape shape = clips.front().shape();
  std::vector<double> out;
  out.reserve(clips.size() * clips.front().numel());
  for (const Tensor& clip : clips) {
    if (clip.shape() != clips.front().shape()) throw DimensionError("segments in a batch differ in shape");
    out.insert(out.end(), clip.data().begin(), clip.data().end());
  }
  shape[0] *= clips.size();
  return Tensor(std::move(shape), std::move(out));
}

/// Mean of per-frame softmax distributions over the rows of one clip.
std::size_t fused_prediction(std::span<const double> logits, std::size_t frames, std::size_t classes) {
  std::vector<double> fused(classes, 0.0);
  for (std::size_t t = 0; t < frames; ++t) {
    const double* row = logits.data() + t * classes;
    double peak = row[0];
    for (std::size_t k = 1; k < classes; ++k) peak = std::max(peak, row[k]);
    double total = 0.0;
    for (std::size_t k = 0; k < classes; ++k) total += std::exp(row[k] - peak);
    for (std::size_t k = 0; k < classes; ++k) fused[k] += std::exp(row[k] - peak) / total;
  }
  return argmax(fused);
}

Tensor vector_tensor(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor(Shape{n}, std::move(values));
}

const Tensor& require(const NamedTensors& tensors, const std::string& name) {
  const Tensor* t = find_tensor(tensors, name);
  if (t == nullptr) throw InputError("checkpoint is missing '" + name + "'");
  return *t;
}

void copy_into(Tensor& dst, const Tensor& src, const std::string& name) {
  if (dst.shape() != src.shape()) {
    throw DimensionError("checkpoint tensor '" + name + "' has shape " + shape_string(src.shape()) + ", model expects " +
                         shape_string(dst.shape()));
  }
  auto out = dst.mutable_data();
  auto in = src.data();
  std::copy(in.begin(), in.end(), out.begin());
}

std::size_t as_count(double v, const std::string& name) {
  if (!(v >= 0.0) || v != std::floor(v)) throw InputError("checkpoint config '" + name + "' is not a count");
  return static_cast<std::size_t>(v);
}

double config_value(const NamedTensors& config, const std::string& name, std::size_t i = 0) {
  const Tensor& t = require(config, "config." + name);
  if (i >= t.numel()) throw InputError("checkpoint config '" + name + "' is too short");
  return t.data()[i];
}

}  // namespace

TrainConfig TrainConfig::for_preset(ModelPreset preset) {
  TrainConfig config;
  config.preset = preset;
  if (preset == ModelPreset::tiny) {
    config.learning_rate = 3e-3;
    config.lstm_layers = 2;
    config.hidden_units = 32;
    config.segment = SegmentSpec{10, 5};
    config.augment.short_side = 18;
    config.augment.crop = 16;
  }
  return config;
}

ModelConfig TrainConfig::model_config() const {
  ModelConfig model;
  model.cnn = preset == ModelPreset::full ? SEResNetConfig::resnet34() : SEResNetConfig::tiny();
  model.cnn.se_enabled = se_spatial;
  model.cnn.se = SEConfig{reduction_ratio, SqueezeAxis::spatial, reweight_mode};
  model.cnn.input_size = augment.crop;

  model.lstm.layers = lstm_layers;
  model.lstm.hidden = hidden_units;
  model.lstm.input_dim = model.cnn.feature_dim();
  model.lstm.sequence_length = segment.length;
  model.lstm.class_count = class_count;
  model.lstm.dropout = dropout;
  model.lstm.se_enabled = se_temporal;
  model.lstm.se = SEConfig{reduction_ratio, squeeze_axis, reweight_mode};
  return model;
}

double TrainConfig::learning_rate_at(std::size_t epoch) const {
  return learning_rate * std::pow(lr_decay, static_cast<double>(epoch));
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw InputError("batch size must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw InputError("learning rate must be positive");
  if (!(lr_decay > 0.0) || lr_decay > 1.0) throw InputError("learning-rate decay must be in (0, 1]");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InputError("dropout must be in [0, 1)");
  if (class_count < 2) throw InputError("at least two classes are required");
  if (squeeze_axis == SqueezeAxis::spatial) throw InputError("sequence squeeze axis must be channel or time");
  segment.validate();
  augment.validate();
  const ModelConfig model = model_config();
  model.cnn.validate();
  model.lstm.validate();
}

ModelPreset parse_preset(const std::string& name) {
  if (name == "full") return ModelPreset::full;
  if (name == "tiny") return ModelPreset::tiny;
  throw InputError("unknown preset '" + name + "' (expected full or tiny)");
}

std::string preset_name(ModelPreset preset) { return preset == ModelPreset::full ? "full" : "tiny"; }

DatasetSplit holdout_split(std::vector<VideoSample> videos, std::size_t every) {
  if (every < 2) throw InputError("holdout interval must be at least 2");
  DatasetSplit split;
  std::vector<std::size_t> seen;
  for (VideoSample& video : videos) {
    if (video.label >= seen.size()) seen.resize(video.label + 1, 0);
    const bool held_out = ++seen[video.label] % every == 0;
    (held_out ? split.eval : split.train).push_back(std::move(video));
  }
  return split;
}

EvalResult evaluate_videos(std::span<const VideoSample> videos, const SegmentSpec& spec, std::size_t class_count,
                           const SegmentPredictor& predictor) {
  EvalResult result;
  result.class_counts.assign(class_count, 0);
  std::vector<std::size_t> correct(class_count, 0);
  std::size_t total_correct = 0;
  for (const VideoSample& video : videos) {
    if (video.label >= class_count) {
      throw IndexError("video '" + video.id + "' has label " + std::to_string(video.label) + " outside " +
                       std::to_string(class_count) + " classes");
    }
    std::vector<double> distribution(class_count, 0.0);
    const std::vector<Segment> segments = segment_video(video, spec);
    for (const Segment& segment : segments) {
      const Tensor per_frame = predictor(segment);
      if (per_frame.rank() != 2 || per_frame.dim(1) != class_count) {
        throw DimensionError("segment predictor returned " + shape_string(per_frame.shape()));
      }
      const Tensor fused = late_fuse(per_frame, FusionMode::mean);
      for (std::size_t k = 0; k < class_count; ++k) distribution[k] += fused[k];
    }
    for (double& p : distribution) p /= static_cast<double>(segments.size());
    const std::size_t predicted = argmax(distribution);
    result.predictions.push_back(predicted);
    result.video_distributions.push_back(vector_tensor(distribution));
    ++result.class_counts[video.label];
    if (predicted == video.label) {
      ++correct[video.label];
      ++total_correct;
    }
  }
  result.accuracy = videos.empty() ? kNaN : static_cast<double>(total_correct) / static_cast<double>(videos.size());
  result.per_class_accuracy.resize(class_count);
  for (std::size_t k = 0; k < class_count; ++k) {
    result.per_class_accuracy[k] = result.class_counts[k] == 0
                                       ? kNaN
                                       : static_cast<double>(correct[k]) / static_cast<double>(result.class_counts[k]);
  }
  return result;
}

EvalResult evaluate(SELRCN& model, const TrainConfig& config, std::span<const VideoSample> videos) {
  AugmentConfig test = config.augment;
  test.mode = AugmentMode::test;
  return evaluate_videos(videos, config.segment, config.class_count, [&](const Segment& segment) {
    Rng unused(0);
    return model.predict_frames(prepare_segment(segment.frames, test, unused), config.precision);
  });
}

Trainer::Trainer(TrainConfig config) : Trainer(std::move(config), 0) {}

Trainer::Trainer(TrainConfig config, std::size_t epoch)
    : config_((config.validate(), std::move(config))),
      model_(config_.model_config(), config_.seed),
      epoch_(epoch) {
  std::vector<Tensor> params = model_.trainable();
  for (Tensor& p : params) p.set_requires_grad(true);
  adam_ = AdamState::for_params(params, AdamHyperparams{config_.learning_rate_at(epoch_), 0.9, 0.999, 1e-8});
}

EpochMetrics Trainer::train_epoch(std::span<const VideoSample> train, std::span<const VideoSample> eval) {
  if (train.empty()) throw InputError("training set is empty");
  const std::uint64_t epoch_seed = derive_seed(config_.seed, {epoch_});

  std::vector<SegmentRef> refs;
  for (std::size_t v = 0; v < train.size(); ++v) {
    if (train[v].label >= config_.class_count) {
      throw IndexError("video '" + train[v].id + "' has label " + std::to_string(train[v].label) + " outside " +
                       std::to_string(config_.class_count) + " classes");
    }
    const std::vector<std::size_t> starts = segment_starts(train[v].frame_count(), config_.segment);
    for (std::size_t i = 0; i < starts.size(); ++i) refs.push_back({v, i, starts[i]});
  }
  Rng order(derive_seed(epoch_seed, {1}));
  order.shuffle(std::span<SegmentRef>(refs));

  adam_.hyper.learning_rate = config_.learning_rate_at(epoch_);
  std::vector<Tensor> params = model_.trainable();
  const std::size_t steps = config_.segment.length;
  const std::size_t classes = config_.class_count;

  double loss_total = 0.0;
  std::size_t correct = 0;
  for (std::size_t begin = 0, batch = 0; begin < refs.size(); begin += config_.batch_size, ++batch) {
    const std::size_t end = std::min(refs.size(), begin + config_.batch_size);
    const std::size_t clips = end - begin;

    std::vector<Tensor> prepared;
    std::vector<std::size_t> labels;
    std::vector<std::size_t> segment_labels;
    for (std::size_t b = begin; b < end; ++b) {
      const VideoSample& video = train[refs[b].video];
      const auto indices = segment_frame_indices(refs[b].start, video.frame_count(), config_.segment);
      Rng augment_rng(segment_seed(epoch_seed, video.id, refs[b].index));
      prepared.push_back(prepare_segment(gather_frames(video.frames, indices), config_.augment, augment_rng));
      segment_labels.push_back(video.label);
      if (config_.final_frame_only) {
        labels.push_back(video.label);
      } else {
        labels.insert(labels.end(), steps, video.label);
      }
    }

    Tape tape(config_.precision);
    Rng dropout_rng(derive_seed(epoch_seed, {2, batch}));
    const Tensor logits = model_.forward(tape, stack_clips(prepared), clips, true, dropout_rng);
    Tensor supervised = logits;
    if (config_.final_frame_only) {
      std::vector<std::size_t> rows;
      for (std::size_t b = 0; b < clips; ++b) rows.push_back(b * steps + steps - 1);
      supervised = ops::gather_rows(tape, logits, rows);
    }
    const Tensor loss = ops::cross_entropy(tape, supervised, labels);
    if (!std::isfinite(loss.item())) {
      throw DivergenceError("non-finite loss in epoch " + std::to_string(epoch_) + ", batch " + std::to_string(batch));
    }

    for (Tensor& p : params) p.zero_grad();
    tape.backward(loss);
    adam_step(params, adam_, config_.precision);

    loss_total += loss.item() * static_cast<double>(clips);
    for (std::size_t b = 0; b < clips; ++b) {
      const auto rows = logits.data().subspan(b * steps * classes, steps * classes);
      if (fused_prediction(rows, steps, classes) == segment_labels[b]) ++correct;
    }
  }

  EpochMetrics metrics;
  metrics.epoch = epoch_;
  metrics.train_loss = loss_total / static_cast<double>(refs.size());
  metrics.train_accuracy = static_cast<double>(correct) / static_cast<double>(refs.size());
  metrics.eval_accuracy = eval.empty() ? kNaN : evaluate(model_, config_, eval).accuracy;
  ++epoch_;
  history_.push_back(metrics);
  return metrics;
}

Metrics Trainer::fit(std::span<const VideoSample> train, std::span<const VideoSample> eval,
                     std::optional<std::size_t> max_epochs) {
  Metrics metrics;
  std::size_t target = config_.epochs;
  if (max_epochs) target = std::min(target, epoch_ + *max_epochs);
  while (epoch_ < target) metrics.epochs.push_back(train_epoch(train, eval));
  if (!eval.empty()) metrics.final_eval = evaluate(model_, config_, eval);
  return metrics;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint ck;
  ck.tensors = model_.parameters();
  const NamedTensors buffers = model_.buffers();
  ck.tensors.insert(ck.tensors.end(), buffers.begin(), buffers.end());

  const NamedTensors params = model_.parameters();
  const AdamHyperparams& h = adam_.hyper;
  ck.optimizer.push_back({"adam.step", vector_tensor({static_cast<double>(adam_.step)})});
  ck.optimizer.push_back({"adam.hyper", vector_tensor({h.learning_rate, h.beta1, h.beta2, h.epsilon})});
  for (std::size_t i = 0; i < adam_.first_moment.size() && adam_.first_moment[i].defined(); ++i) {
    ck.optimizer.push_back({"adam.m." + params[i].name, adam_.first_moment[i]});
    ck.optimizer.push_back({"adam.v." + params[i].name, adam_.second_moment[i]});
  }

  const TrainConfig& c = config_;
  auto put = [&](const std::string& name, std::vector<double> values) {
    ck.config.push_back({"config." + name, vector_tensor(std::move(values))});
  };
  std::vector<double> seed_chunks;
  for (int i = 0; i < 4; ++i) seed_chunks.push_back(static_cast<double>((c.seed >> (16 * i)) & 0xFFFFu));
  put("preset", {c.preset == ModelPreset::full ? 0.0 : 1.0});
  put("epochs", {static_cast<double>(c.epochs)});
  put("learning_rate", {c.learning_rate});
  put("lr_decay", {c.lr_decay});
  put("batch_size", {static_cast<double>(c.batch_size)});
  put("dropout", {c.dropout});
  put("seed", seed_chunks);
  put("se", {c.se_spatial ? 1.0 : 0.0, c.se_temporal ? 1.0 : 0.0});
  put("squeeze_axis", {static_cast<double>(static_cast<int>(c.squeeze_axis))});
  put("reweight_mode", {static_cast<double>(static_cast<int>(c.reweight_mode))});
  put("reduction_ratio", {static_cast<double>(c.reduction_ratio)});
  put("lstm", {static_cast<double>(c.lstm_layers), static_cast<double>(c.hidden_units)});
  put("class_count", {static_cast<double>(c.class_count)});
  put("final_frame_only", {c.final_frame_only ? 1.0 : 0.0});
  put("precision", {c.precision == Precision::f32 ? 32.0 : 64.0});
  put("segment", {static_cast<double>(c.segment.length), static_cast<double>(c.segment.stride)});
  put("augment", {static_cast<double>(c.augment.short_side), static_cast<double>(c.augment.crop), c.augment.flip_prob,
                  c.augment.mean[0], c.augment.mean[1], c.augment.mean[2], c.augment.std[0], c.augment.std[1],
                  c.augment.std[2]});
  put("epochs_completed", {static_cast<double>(epoch_)});
  if (!history_.empty()) {
    std::vector<double> rows;
    for (const EpochMetrics& m : history_) {
      rows.insert(rows.end(), {static_cast<double>(m.epoch), m.train_loss, m.train_accuracy, m.eval_accuracy});
    }
    ck.config.push_back({"config.history", Tensor(Shape{history_.size(), 4}, std::move(rows))});
  }
  return ck;
}

TrainConfig config_from_checkpoint(const Checkpoint& checkpoint) {
  const NamedTensors& cfg = checkpoint.config;
  auto count = [&](const std::string& name, std::size_t i = 0) { return as_count(config_value(cfg, name, i), name); };
  TrainConfig c;
  c.preset = count("preset") == 0 ? ModelPreset::full : ModelPreset::tiny;
  c.epochs = count("epochs");
  c.learning_rate = config_value(cfg, "learning_rate");
  c.lr_decay = config_value(cfg, "lr_decay");
  c.batch_size = count("batch_size");
  c.dropout = config_value(cfg, "dropout");
  c.seed = 0;
  for (std::size_t i = 0; i < 4; ++i) c.seed |= static_cast<std::uint64_t>(count("seed", i)) << (16 * i);
  c.se_spatial = count("se", 0) != 0;
  c.se_temporal = count("se", 1) != 0;
  const std::size_t axis = count("squeeze_axis");
  if (axis > 2) throw InputError("checkpoint config 'squeeze_axis' is out of range");
  c.squeeze_axis = static_cast<SqueezeAxis>(axis);
  const std::size_t mode = count("reweight_mode");
  if (mode > 1) throw InputError("checkpoint config 'reweight_mode' is out of range");
  c.reweight_mode = static_cast<ReweightMode>(mode);
  c.reduction_ratio = count("reduction_ratio");
  c.lstm_layers = count("lstm", 0);
  c.hidden_units = count("lstm", 1);
  c.class_count = count("class_count");
  c.final_frame_only = count("final_frame_only") != 0;
  c.precision = count("precision") == 32 ? Precision::f32 : Precision::f64;
  c.segment = SegmentSpec{count("segment", 0), count("segment", 1)};
  c.augment.short_side = count("augment", 0);
  c.augment.crop = count("augment", 1);
  c.augment.flip_prob = config_value(cfg, "augment", 2);
  for (std::size_t i = 0; i < 3; ++i) {
    c.augment.mean[i] = config_value(cfg, "augment", 3 + i);
    c.augment.std[i] = config_value(cfg, "augment", 6 + i);
  }
  c.validate();
  return c;
}

namespace {

void load_model_tensors(SELRCN& model, const Checkpoint& checkpoint) {
  for (NamedTensors group : {model.parameters(), model.buffers()}) {
    for (NamedTensor& nt : group) copy_into(nt.tensor, require(checkpoint.tensors, nt.name), nt.name);
  }
}

}  // namespace

std::size_t import_weights(SELRCN& model, const NamedTensors& tensors, std::string_view prefix) {
  std::size_t copied = 0;
  for (NamedTensors group : {model.parameters(), model.buffers()}) {
    for (NamedTensor& nt : group) {
      if (nt.name.rfind(prefix, 0) != 0) continue;
      const Tensor* src = find_tensor(tensors, nt.name);
      if (src == nullptr) continue;
      copy_into(nt.tensor, *src, nt.name);
      ++copied;
    }
  }
  return copied;
}

Trainer Trainer::resume(const Checkpoint& checkpoint) {
  TrainConfig config = config_from_checkpoint(checkpoint);
  const std::size_t epoch = as_count(config_value(checkpoint.config, "epochs_completed"), "epochs_completed");
  Trainer trainer(std::move(config), epoch);
  load_model_tensors(trainer.model_, checkpoint);

  const NamedTensors& opt = checkpoint.optimizer;
  trainer.adam_.step = static_cast<std::uint64_t>(as_count(require(opt, "adam.step").item(), "adam.step"));
  const Tensor& hyper = require(opt, "adam.hyper");
  if (hyper.numel() != 4) throw DimensionError("checkpoint 'adam.hyper' must hold 4 values");
  trainer.adam_.hyper = AdamHyperparams{hyper[0], hyper[1], hyper[2], hyper[3]};
  if (trainer.adam_.step > 0) {
    const NamedTensors params = trainer.model_.parameters();
    trainer.adam_.first_moment.clear();
    trainer.adam_.second_moment.clear();
    for (const NamedTensor& p : params) {
      Tensor m(p.tensor.shape(), 0.0);
      Tensor v(p.tensor.shape(), 0.0);
      copy_into(m, require(opt, "adam.m." + p.name), "adam.m." + p.name);
      copy_into(v, require(opt, "adam.v." + p.name), "adam.v." + p.name);
      trainer.adam_.first_moment.push_back(m);
      trainer.adam_.second_moment.push_back(v);
    }
  }

  if (const Tensor* history = find_tensor(checkpoint.config, "config.history")) {
    if (history->rank() != 2 || history->dim(1) != 4) throw DimensionError("checkpoint history must be [E×4]");
    for (std::size_t e = 0; e < history->dim(0); ++e) {
      trainer.history_.push_back({static_cast<std::size_t>(history->at({e, 0})), history->at({e, 1}),
                                  history->at({e, 2}), history->at({e, 3})});
    }
  }
  return trainer;
}

TrainResult train(const TrainConfig& config, std::span<const VideoSample> train_videos,
                  std::span<const VideoSample> eval_videos) {
  Trainer trainer(config);
  TrainResult result;
  result.metrics = trainer.fit(train_videos, eval_videos);
  result.checkpoint = trainer.checkpoint();
  return result;
}

LoadedModel load_model(const Checkpoint& checkpoint) {
  TrainConfig config = config_from_checkpoint(checkpoint);
  LoadedModel loaded{config, SELRCN(config.model_config(), config.seed)};
  load_model_tensors(loaded.model, checkpoint);
  return loaded;
}

std::vector<AblationRow> ablation_grid(const TrainConfig& base, const AblationAxes& axes,
                                       std::span<const VideoSample> train_videos,
                                       std::span<const VideoSample> eval_videos) {
  std::vector<std::pair<bool, bool>> se_settings{{base.se_spatial, base.se_temporal}};
  if (axes.se) se_settings = {{false, false}, {true, false}, {false, true}, {true, true}};
  const std::vector<std::size_t> layers = axes.layers.empty() ? std::vector{base.lstm_layers} : axes.layers;
  const std::vector<std::size_t> hidden = axes.hidden.empty() ? std::vector{base.hidden_units} : axes.hidden;

  std::vector<AblationRow> rows;
  for (const auto& [spatial, temporal] : se_settings) {
    for (std::size_t l : layers) {
      for (std::size_t h : hidden) {
        TrainConfig config = base;
        config.se_spatial = spatial;
        config.se_temporal = temporal;
        config.lstm_layers = l;
        config.hidden_units = h;
        const TrainResult result = train(config, train_videos, eval_videos);
        rows.push_back({spatial, temporal, l, h, result.metrics.final_eval.accuracy});
      }
    }
  }
  return rows;
}

GradCheckResult composite_grad_check(const CompositeCheckConfig& config, std::uint64_t seed) {
  TrainConfig train = TrainConfig::for_preset(config.preset);
  train.class_count = config.classes;
  train.lstm_layers = config.layers;
  train.hidden_units = config.hidden;
  train.segment = SegmentSpec{config.frames, config.frames};
  train.augment.crop = config.image;
  train.augment.short_side = config.image;
  train.precision = Precision::f64;
  train.dropout = 0.25;
  train.seed = seed;
  train.validate();

  SELRCN model(train.model_config(), seed);
  Rng data_rng(derive_seed(seed, {3}));
  const std::size_t frame_count = config.clips * config.frames;
  Tensor frames(Shape{frame_count, 3, config.image, config.image}, 0.0);
  for (double& v : frames.mutable_data()) v = data_rng.normal();
  std::vector<std::size_t> labels;
  for (std::size_t b = 0; b < config.clips; ++b) {
    labels.insert(labels.end(), config.frames, data_rng.below(config.classes));
  }

  std::vector<Tensor> params = model.trainable();
  // Nudge parameters off their initial values so no gradient is trivially zero.
  for (Tensor& p : params) {
    for (double& v : p.mutable_data()) v += 0.05 * data_rng.normal();
  }
  const std::uint64_t dropout_seed = derive_seed(seed, {4});
  const auto loss = [&](Tape& tape) {
    Rng dropout_rng(dropout_seed);
    const Tensor logits = model.forward(tape, frames, config.clips, true, dropout_rng);
    return ops::cross_entropy(tape, logits, labels);
  };
  return grad_check(loss, params, config.options);
}

void write_metrics_csv(std::ostream& out, const Metrics& metrics) {
  out << "epoch,train_loss,train_acc,eval_acc\n";
  for (const EpochMetrics& m : metrics.epochs) {
    out << m.epoch << ',' << m.train_loss << ',' << m.train_accuracy << ',' << m.eval_accuracy << '\n';
  }
}

void write_ablation_csv(std::ostream& out, std::span<const AblationRow> rows) {
  out << "se_spatial,se_temporal,layers,hidden,eval_acc\n";
  for (const AblationRow& r : rows) {
    out << (r.se_spatial ? 1 : 0) << ',' << (r.se_temporal ? 1 : 0) << ',' << r.layers << ',' << r.hidden << ','
        << r.eval_accuracy << '\n';
  }
}

void write_eval_csv(std::ostream& out, const EvalResult& result) {
  out << "class,count,accuracy\n";
  std::size_t total = 0;
  for (std::size_t k = 0; k < result.class_counts.size(); ++k) {
    out << k << ',' << result.class_counts[k] << ',' << result.per_class_accuracy[k] << '\n';
    total += result.class_counts[k];
  }
  out << "all," << total << ',' << result.accuracy << '\n';
}

}  // namespace selrcn
