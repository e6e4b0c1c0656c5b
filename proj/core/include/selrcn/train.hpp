#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "selrcn/adam.hpp"
#include "selrcn/checkpoint.hpp"
#include "selrcn/grad_check.hpp"
#include "selrcn/model.hpp"
#include "selrcn/se.hpp"
#include "selrcn/se_lstm.hpp"
#include "selrcn/video.hpp"

namespace selrcn {

enum class ModelPreset { full, tiny };

struct TrainConfig {
  ModelPreset preset = ModelPreset::full;
  std::size_t epochs = 16;
  double learning_rate = 1e-5;
  double lr_decay = 0.9;
  std::size_t batch_size = 28;
  double dropout = 0.5;
  std::uint64_t seed = 0;

  bool se_spatial = true;
  bool se_temporal = true;
  SqueezeAxis squeeze_axis = SqueezeAxis::channel;
  ReweightMode reweight_mode = ReweightMode::residual;
  std::size_t reduction_ratio = 16;
  std::size_t lstm_layers = 3;
  std::size_t hidden_units = 1024;
  std::size_t class_count = 0;

  /// Supervise only the last frame of each segment instead of every frame.
  bool final_frame_only = false;
  Precision precision = Precision::f32;
  SegmentSpec segment{30, 15};
  AugmentConfig augment;

  /// Defaults for a preset: "full" is the ResNet-34 / 3×1024 configuration on
  /// 224 crops, "tiny" a desk-scale model on 16-pixel crops of 10-frame clips.
  static TrainConfig for_preset(ModelPreset preset);

  ModelConfig model_config() const;
  double learning_rate_at(std::size_t epoch) const;
  void validate() const;
};

ModelPreset parse_preset(const std::string& name);
std::string preset_name(ModelPreset preset);

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double eval_accuracy = 0.0;
};

struct EvalResult {
  double accuracy = 0.0;
  std::vector<std::size_t> class_counts;
  std::vector<double> per_class_accuracy;  // NaN for classes with no videos
  std::vector<std::size_t> predictions;
  std::vector<Tensor> video_distributions;
};

struct Metrics {
  std::vector<EpochMetrics> epochs;
  EvalResult final_eval;
};

struct DatasetSplit {
  std::vector<VideoSample> train;
  std::vector<VideoSample> eval;
};

/// Moves every `every`-th video of each class (counting in input order) to
/// the evaluation side.
DatasetSplit holdout_split(std::vector<VideoSample> videos, std::size_t every = 4);

/// Per-frame class distributions [T×K] for one preprocessed segment.
using SegmentPredictor = std::function<Tensor(const Segment& segment)>;

/// Video-level accuracy: every segment's frame distributions are mean-fused,
/// a video's distribution is the mean over its segments, and the prediction
/// is its argmax.
EvalResult evaluate_videos(std::span<const VideoSample> videos, const SegmentSpec& spec, std::size_t class_count,
                           const SegmentPredictor& predictor);

/// Evaluation-mode accuracy of `model` with test-mode preprocessing.
EvalResult evaluate(SELRCN& model, const TrainConfig& config, std::span<const VideoSample> videos);

class Trainer {
 public:
  explicit Trainer(TrainConfig config);

  /// Restores model, optimizer, configuration and epoch counter.
  static Trainer resume(const Checkpoint& checkpoint);

  const TrainConfig& config() const { return config_; }
  SELRCN& model() { return model_; }
  std::size_t epochs_completed() const { return epoch_; }
  const std::vector<EpochMetrics>& history() const { return history_; }
  /// Changes the total epoch count, e.g. to train a resumed run further.
  void set_epochs(std::size_t epochs) { config_.epochs = epochs; }

  /// Runs one epoch and evaluates on `eval` afterwards (NaN if empty).
  /// Throws DivergenceError naming the batch on a non-finite loss.
  EpochMetrics train_epoch(std::span<const VideoSample> train, std::span<const VideoSample> eval);

  /// Trains until config().epochs epochs are complete, or `max_epochs` more.
  Metrics fit(std::span<const VideoSample> train, std::span<const VideoSample> eval,
              std::optional<std::size_t> max_epochs = std::nullopt);

  Checkpoint checkpoint() const;

 private:
  Trainer(TrainConfig config, std::size_t epoch);

  TrainConfig config_;
  SELRCN model_;
  AdamState adam_;
  std::size_t epoch_ = 0;
  std::vector<EpochMetrics> history_;
};

struct TrainResult {
  Checkpoint checkpoint;
  Metrics metrics;
};

TrainResult train(const TrainConfig& config, std::span<const VideoSample> train_videos,
                  std::span<const VideoSample> eval_videos);

/// Model restored from a checkpoint together with its training configuration.
struct LoadedModel {
  TrainConfig config;
  SELRCN model;
};
LoadedModel load_model(const Checkpoint& checkpoint);

TrainConfig config_from_checkpoint(const Checkpoint& checkpoint);

/// Copies every model parameter and buffer whose name starts with `prefix`
/// and appears in `tensors` (e.g. externally converted "cnn." weights).
/// Returns the number of tensors copied; a shape mismatch is an error.
std::size_t import_weights(SELRCN& model, const NamedTensors& tensors, std::string_view prefix = "");

/// Grid axes for ablation runs. With `se` set, all four SE on/off
/// combinations are run in the order (off,off), (spatial), (temporal),
/// (both); otherwise the base configuration's flags are kept. Empty layer or
/// hidden lists keep the base value.
struct AblationAxes {
  bool se = true;
  std::vector<std::size_t> layers;
  std::vector<std::size_t> hidden;
};

struct AblationRow {
  bool se_spatial = false;
  bool se_temporal = false;
  std::size_t layers = 0;
  std::size_t hidden = 0;
  double eval_accuracy = 0.0;
};

std::vector<AblationRow> ablation_grid(const TrainConfig& base, const AblationAxes& axes,
                                       std::span<const VideoSample> train_videos,
                                       std::span<const VideoSample> eval_videos);

/// Small end-to-end configuration for the finite-difference check of the
/// whole network (CNN → SE-LSTM → head → frame cross-entropy).
struct CompositeCheckConfig {
  ModelPreset preset = ModelPreset::tiny;
  std::size_t clips = 2;
  std::size_t frames = 3;
  std::size_t image = 8;
  std::size_t classes = 3;
  std::size_t layers = 2;
  std::size_t hidden = 4;
  GradCheckOptions options{1e-3, 2, 24, 0};
};

/// Gradient check of the training loss with respect to every trainable
/// tensor, in training mode with a fixed dropout mask, in 64-bit precision.
GradCheckResult composite_grad_check(const CompositeCheckConfig& config, std::uint64_t seed);

/// epoch,train_loss,train_acc,eval_acc
void write_metrics_csv(std::ostream& out, const Metrics& metrics);
/// se_spatial,se_temporal,layers,hidden,eval_acc
void write_ablation_csv(std::ostream& out, std::span<const AblationRow> rows);
/// class,count,accuracy followed by an "all" row.
void write_eval_csv(std::ostream& out, const EvalResult& result);

}  // namespace selrcn
